//! End-to-end tests driving the compiled binary through a miniature
//! experiment: generate levels, simulate, build a corpus, train a model,
//! evolve pairs and evaluate them.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn classforge(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_classforge"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).to_string()
}

/// Tiny experiment config so the whole pipeline runs in seconds.
const TINY_CONFIG: &str = r#"
master_seed = 9

[corpus]
n_configs = 40
validation_fraction = 0.15

[train]
max_epochs = 6
batch_size = 16

[evolution]
population = 20
generations = 12

[evaluate]
ground_truth_matches = 3
"#;

#[test]
fn gen_level_is_byte_identical_and_count_derives_seeds() {
    let dir = tempfile::tempdir().unwrap();
    ok(&classforge(&["gen-level", "--seed", "7", "--out", "a.level"], dir.path()));
    ok(&classforge(&["gen-level", "--seed", "7", "--out", "b.level"], dir.path()));
    let a = fs::read(dir.path().join("a.level")).unwrap();
    let b = fs::read(dir.path().join("b.level")).unwrap();
    assert_eq!(a, b, "same seed must give byte-identical files");

    ok(&classforge(
        &["gen-level", "--seed", "7", "--out", "multi.level", "--count", "3"],
        dir.path(),
    ));
    for i in 0..3 {
        let path = dir.path().join(format!("multi_{i:02}.level"));
        assert!(path.exists(), "{} missing", path.display());
    }
    // derived seeds differ from the plain seed
    let first = fs::read(dir.path().join("multi_00.level")).unwrap();
    assert_ne!(a, first);

    // invalid output path (parent is a file) is an error with nonzero exit
    fs::write(dir.path().join("blocker"), "not a directory").unwrap();
    let bad = classforge(
        &["gen-level", "--seed", "1", "--out", "blocker/x.level"],
        dir.path(),
    );
    assert!(!bad.status.success());
}

#[test]
fn show_level_prints_grid_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    ok(&classforge(&["gen-level", "--seed", "3", "--out", "g.level"], dir.path()));
    let out = ok(&classforge(&["show-level", "g.level"], dir.path()));
    assert_eq!(out.lines().take_while(|l| l.len() == 20).count(), 20);
    assert!(out.contains("walkable tiles"));

    let missing = classforge(&["show-level", "missing.level"], dir.path());
    assert!(!missing.status.success());
}

#[test]
fn simulate_emits_an_outcome_record() {
    let dir = tempfile::tempdir().unwrap();
    ok(&classforge(&["gen-level", "--seed", "5", "--out", "g.level"], dir.path()));
    fs::write(
        dir.path().join("c1.class"),
        "hp=0.8 speed=0.5 damage=0.9 accuracy=0.8 rof=0.7 clip=0.5 bullets=0.5 range=medium\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("c2.class"),
        "hp=0.4 speed=0.9 damage=0.6 accuracy=0.5 rof=0.9 clip=0.4 bullets=0.3 range=short\n",
    )
    .unwrap();
    let out = ok(&classforge(
        &[
            "simulate", "--level", "g.level", "--class1", "c1.class", "--class2", "c2.class",
            "--seed", "11", "--events", "events.txt",
        ],
        dir.path(),
    ));
    assert!(out.contains("kills_p1=") && out.contains("score="));
    assert!(dir.path().join("events.txt").exists());
    // identical invocation reproduces the record exactly
    let again = ok(&classforge(
        &[
            "simulate", "--level", "g.level", "--class1", "c1.class", "--class2", "c2.class",
            "--seed", "11",
        ],
        dir.path(),
    ));
    assert_eq!(out.lines().next(), again.lines().next());
}

#[test]
fn full_pipeline_smoke_on_two_levels() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.toml"), TINY_CONFIG).unwrap();
    let cfg = ["--config", "tiny.toml"];

    ok(&classforge(
        &[&["gen-level", "--seed", "1", "--out", "g01.level"][..], &cfg].concat(),
        dir.path(),
    ));
    // a designed level from the repository assets
    let d01 = concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets/levels/d01.level");
    fs::copy(d01, dir.path().join("d01.level")).unwrap();

    // a single configuration yields at most two samples
    let single = ok(&classforge(
        &[&["build-corpus", "--out", "single.cfc", "--n-configs", "1"][..], &cfg].concat(),
        dir.path(),
    ));
    let n: usize = single
        .split_once(" samples")
        .and_then(|(head, _)| head.rsplit('(').next())
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| panic!("no sample count in {single:?}"));
    assert!(n <= 2, "one config produced {n} samples");

    ok(&classforge(
        &[&["build-corpus", "--out", "corpus.cfc", "--text-export", "corpus.txt"][..], &cfg]
            .concat(),
        dir.path(),
    ));
    assert!(dir.path().join("corpus.cfc").exists());
    assert!(dir.path().join("corpus.report.csv").exists());
    assert!(dir.path().join("corpus.txt").exists());

    // unknown model kind is a usage error
    let bad = classforge(
        &[&["train", "--corpus", "corpus.cfc", "--kind", "svm", "--out", "m.cfw"][..], &cfg]
            .concat(),
        dir.path(),
    );
    assert!(!bad.status.success());

    let train_out = ok(&classforge(
        &[&["train", "--corpus", "corpus.cfc", "--kind", "linear", "--out", "linear.cfw"][..], &cfg]
            .concat(),
        dir.path(),
    ));
    assert!(train_out.contains("mae_t="));
    let metrics = fs::read_to_string(dir.path().join("linear.metrics.csv")).unwrap();
    assert!(metrics.starts_with("mae_t,mae_s,r2_t,r2_s\n"));
    assert!(dir.path().join("linear.epochs.csv").exists());

    // missing model file is an error
    let missing = classforge(
        &[&["evolve", "--level", "g01.level", "--model", "nope.cfw", "--target", "short",
            "--out-dir", "pairs"][..], &cfg]
            .concat(),
        dir.path(),
    );
    assert!(!missing.status.success());

    for level in ["g01.level", "d01.level"] {
        for target in ["short", "long"] {
            ok(&classforge(
                &[&["evolve", "--level", level, "--model", "linear.cfw", "--target", target,
                    "--out-dir", "pairs", "--seed", "3"][..], &cfg]
                    .concat(),
                dir.path(),
            ));
        }
    }
    // explicit --dt/--ds override presets
    ok(&classforge(
        &[&["evolve", "--level", "g01.level", "--model", "linear.cfw", "--dt", "0.4",
            "--ds", "0.5", "--out-dir", "pairs", "--seed", "3"][..], &cfg]
            .concat(),
        dir.path(),
    ));
    assert!(dir.path().join("pairs/g01__custom.pair").exists());
    let trace = fs::read_to_string(dir.path().join("pairs/g01__short__trace.csv")).unwrap();
    assert!(trace.starts_with("generation,best_ever,mean\n"));
    assert_eq!(trace.lines().count(), 13, "12 generations plus header");

    // fixed seed reproduces the evolved pair bit for bit
    let pair_a = fs::read_to_string(dir.path().join("pairs/g01__short.pair")).unwrap();
    ok(&classforge(
        &[&["evolve", "--level", "g01.level", "--model", "linear.cfw", "--target", "short",
            "--out-dir", "pairs2", "--seed", "3"][..], &cfg]
            .concat(),
        dir.path(),
    ));
    let pair_b = fs::read_to_string(dir.path().join("pairs2/g01__short.pair")).unwrap();
    assert_eq!(pair_a, pair_b);
    let trace_b = fs::read_to_string(dir.path().join("pairs2/g01__short__trace.csv")).unwrap();
    assert_eq!(trace, trace_b, "fixed seed must reproduce the fitness trace");

    let out = ok(&classforge(
        &[&["evaluate", "--levels", "g01.level", "d01.level", "--pairs-dir", "pairs",
            "--model", "linear.cfw", "--out", "reports", "--id", "smoke"][..], &cfg]
            .concat(),
        dir.path(),
    ));
    assert!(out.contains("runs evaluated: 4"), "stdout: {out}");
    for file in [
        "smoke_accuracy.csv",
        "smoke_distances.csv",
        "smoke_trends.csv",
        "smoke_tf2.csv",
        "smoke_summary.txt",
    ] {
        assert!(dir.path().join("reports").join(file).exists(), "{file} missing");
    }
    let accuracy = fs::read_to_string(dir.path().join("reports/smoke_accuracy.csv")).unwrap();
    // header plus one row per evaluated (level, target) pair
    assert_eq!(accuracy.lines().count(), 5);
    // the custom-target pair is skipped with a note, not an error
    let summary = fs::read_to_string(dir.path().join("reports/smoke_summary.txt")).unwrap();
    assert!(summary.contains("skipped"));
}

#[test]
fn help_lists_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&classforge(&["--help"], dir.path()));
    for sub in [
        "gen-level",
        "show-level",
        "simulate",
        "build-corpus",
        "train",
        "evolve",
        "evaluate",
    ] {
        assert!(out.contains(sub), "--help missing {sub}");
    }
}
