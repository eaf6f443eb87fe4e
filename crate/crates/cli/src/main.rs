//! Command-line pipeline: level generation and inspection, match
//! simulation, corpus building, surrogate training, class-pair evolution
//! and ground-truth evaluation. Every command is reproducible from the
//! configuration file plus the explicit seeds; commands compose through
//! files only.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use classforge::analysis::{
    accuracy_csv, accuracy_record, distance_csv, distance_report, summary_text, tf2_csv,
    tf2_report, trend_csv, trend_report,
};
use classforge::classes::{denormalize, parse_class_line, parse_pair, render_pair, CharacterClass};
use classforge::config::ExperimentConfig;
use classforge::corpus::{distribution_report, export_text, load_corpus, save_corpus};
use classforge::evolve::{DesiredOutcome, TargetPreset};
use classforge::level::{generate_level, parse_level, render_level, Level, MovementGraph};
use classforge::pipeline::{
    build_experiment_corpus, evaluate_runs, evolve_pair, train_on_corpus, EvalRequest,
};
use classforge::rng::derive_seed;
use classforge::sim::{simulate_match, simulate_match_logged};
use classforge::surrogate::{epoch_log_csv, load_model, metrics_csv, save_model, ModelKind};

#[derive(Parser)]
#[command(
    name = "classforge",
    version,
    about = "Balance character-class pairs for a grid deathmatch shooter via a learned surrogate"
)]
struct Cli {
    /// Experiment configuration file (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for simulation- and training-heavy commands
    /// (default: all cores). Outputs do not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate playable levels into text files.
    GenLevel {
        /// Generation seed. With --count > 1, file i uses a seed derived
        /// from (seed, "level", i).
        #[arg(long)]
        seed: u64,
        /// Output path; with --count > 1 files get a numeric suffix.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        count: u64,
    },
    /// Print a level file with a short structural summary.
    ShowLevel { level: PathBuf },
    /// Simulate one match and print the outcome record.
    Simulate {
        #[arg(long)]
        level: PathBuf,
        /// Class file for player 1 (one class line).
        #[arg(long, conflicts_with = "pair")]
        class1: Option<PathBuf>,
        /// Class file for player 2 (one class line).
        #[arg(long, conflicts_with = "pair")]
        class2: Option<PathBuf>,
        /// Two-line pair file supplying both players.
        #[arg(long)]
        pair: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        /// Write a per-event text log here.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Simulate the configured number of level/class setups into a corpus.
    BuildCorpus {
        #[arg(long)]
        out: PathBuf,
        /// Override the configured number of configurations.
        #[arg(long)]
        n_configs: Option<u64>,
        /// Override the configured master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write a line-delimited text export.
        #[arg(long)]
        text_export: Option<PathBuf>,
    },
    /// Train a surrogate model on a corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        /// Model kind: cnn, mlp16, perceptron or linear.
        #[arg(long)]
        kind: String,
        /// Output weight file; metrics and epoch-log CSVs are written next
        /// to it.
        #[arg(long)]
        out: PathBuf,
        /// Override the derived training seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evolve a class pair for one level and target against a trained model.
    Evolve {
        #[arg(long)]
        level: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Target preset: short, medium or long.
        #[arg(long, conflicts_with_all = ["dt", "ds"])]
        target: Option<String>,
        /// Explicit desired normalized duration (with --ds).
        #[arg(long, requires = "ds")]
        dt: Option<f64>,
        /// Explicit desired score (with --dt).
        #[arg(long, requires = "dt")]
        ds: Option<f64>,
        /// Output directory for the pair and trace files.
        #[arg(long)]
        out_dir: PathBuf,
        /// Evolution seed (default: derived from the config master seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Ground-truth evolved pairs and write the report suite.
    Evaluate {
        /// Level files referenced by the pair file names.
        #[arg(long, num_args = 1.., required = true)]
        levels: Vec<PathBuf>,
        /// Directory of `<level>__<target>.pair` files (from `evolve`).
        #[arg(long)]
        pairs_dir: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Output directory for the CSV reports and text summary.
        #[arg(long)]
        out: PathBuf,
        /// Experiment id used as the report file prefix.
        #[arg(long, default_value = "eval")]
        id: String,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("initializing the worker pool")?;
    }
    let cfg = match &cli.config {
        Some(path) => {
            ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?
        }
        None => ExperimentConfig::from_toml("").expect("defaults are valid"),
    };
    match cli.command {
        Command::GenLevel { seed, out, count } => cmd_gen_level(&cfg, seed, &out, count),
        Command::ShowLevel { level } => cmd_show_level(&level),
        Command::Simulate {
            level,
            class1,
            class2,
            pair,
            seed,
            events,
        } => cmd_simulate(&cfg, &level, class1, class2, pair, seed, events),
        Command::BuildCorpus {
            out,
            n_configs,
            seed,
            text_export,
        } => cmd_build_corpus(cfg, &out, n_configs, seed, text_export),
        Command::Train {
            corpus,
            kind,
            out,
            seed,
        } => cmd_train(cfg, &corpus, &kind, &out, seed),
        Command::Evolve {
            level,
            model,
            target,
            dt,
            ds,
            out_dir,
            seed,
        } => cmd_evolve(&cfg, &level, &model, target, dt, ds, &out_dir, seed),
        Command::Evaluate {
            levels,
            pairs_dir,
            model,
            out,
            id,
        } => cmd_evaluate(&cfg, &levels, &pairs_dir, &model, &out, &id),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_level(path: &Path) -> Result<Level> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_level(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_gen_level(cfg: &ExperimentConfig, seed: u64, out: &Path, count: u64) -> Result<()> {
    if count == 0 {
        bail!("--count must be at least 1");
    }
    for i in 0..count {
        let level_seed = if count == 1 {
            seed
        } else {
            derive_seed(seed, "level", i)
        };
        let level = generate_level(level_seed, &cfg.generator)?;
        let path = if count == 1 {
            out.to_path_buf()
        } else {
            numbered(out, i)
        };
        write_file(&path, &render_level(&level))?;
        println!("wrote {} (seed {level_seed})", path.display());
    }
    Ok(())
}

fn numbered(out: &Path, i: u64) -> PathBuf {
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    let ext = out
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    out.with_file_name(format!("{stem}_{i:02}{ext}"))
}

fn cmd_show_level(path: &Path) -> Result<()> {
    let level = load_level(path)?;
    print!("{}", render_level(&level));
    let graph = MovementGraph::build(&level);
    let powerups = level.powerups();
    println!(
        "walkable tiles: {} | powerups: {} | seed note: text format carries no seed",
        graph.node_count(),
        powerups.len()
    );
    Ok(())
}

fn load_single_class(path: &Path) -> Result<CharacterClass> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let line = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .ok_or_else(|| anyhow!("{} contains no class line", path.display()))?;
    Ok(parse_class_line(line, 1)?)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    cfg: &ExperimentConfig,
    level: &Path,
    class1: Option<PathBuf>,
    class2: Option<PathBuf>,
    pair: Option<PathBuf>,
    seed: u64,
    events: Option<PathBuf>,
) -> Result<()> {
    let level = load_level(level)?;
    let (c1, c2) = match (pair, class1, class2) {
        (Some(pair_path), None, None) => {
            let text = fs::read_to_string(&pair_path)
                .with_context(|| format!("reading {}", pair_path.display()))?;
            let pair = parse_pair(&text)?;
            (pair.player1, pair.player2)
        }
        (None, Some(c1), Some(c2)) => (load_single_class(&c1)?, load_single_class(&c2)?),
        _ => bail!("provide either --pair or both --class1 and --class2"),
    };
    let p1 = denormalize(&c1, &cfg.ranges);
    let p2 = denormalize(&c2, &cfg.ranges);
    if let Some(events_path) = events {
        let (outcome, log) =
            simulate_match_logged(&level, &p1, &p2, seed, &cfg.match_config)?;
        write_file(&events_path, &(log.join("\n") + "\n"))?;
        println!("{}", outcome.render());
    } else {
        let outcome = simulate_match(&level, &p1, &p2, seed, &cfg.match_config)?;
        println!("{}", outcome.render());
    }
    Ok(())
}

fn cmd_build_corpus(
    mut cfg: ExperimentConfig,
    out: &Path,
    n_configs: Option<u64>,
    seed: Option<u64>,
    text_export: Option<PathBuf>,
) -> Result<()> {
    if let Some(n) = n_configs {
        cfg.corpus.n_configs = n;
    }
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    cfg.validate()?;
    let corpus = build_experiment_corpus(&cfg)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    save_corpus(&corpus, out)?;
    let report = distribution_report(&corpus)?;
    let report_path = out.with_extension("report.csv");
    write_file(&report_path, &report.to_csv())?;
    if let Some(text_path) = text_export {
        write_file(&text_path, &export_text(&corpus))?;
    }
    println!(
        "wrote {} ({} samples, {} incomplete dropped) and {}",
        out.display(),
        corpus.samples.len(),
        corpus.dropped_incomplete,
        report_path.display()
    );
    println!("{}", report.summary());
    Ok(())
}

fn cmd_train(
    mut cfg: ExperimentConfig,
    corpus_path: &Path,
    kind: &str,
    out: &Path,
    seed: Option<u64>,
) -> Result<()> {
    let kind = ModelKind::parse(kind)
        .ok_or_else(|| anyhow!("unknown model kind {kind:?} (cnn, mlp16, perceptron, linear)"))?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    let corpus = load_corpus(corpus_path)
        .with_context(|| format!("loading {}", corpus_path.display()))?;
    let outcome = train_on_corpus(&corpus, kind, &cfg)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    save_model(&outcome.model, out)?;
    let metrics_path = out.with_extension("metrics.csv");
    write_file(&metrics_path, &metrics_csv(&outcome.metrics))?;
    let epochs_path = out.with_extension("epochs.csv");
    write_file(&epochs_path, &epoch_log_csv(&outcome.log))?;
    let m = &outcome.metrics;
    println!(
        "wrote {} (best epoch {} of {})",
        out.display(),
        outcome.best_epoch,
        outcome.log.len()
    );
    println!(
        "validation: mae_t={:.4} mae_s={:.4} r2_t={} r2_s={}",
        m.mae_t,
        m.mae_s,
        m.r2_t.map_or("NA".into(), |v| format!("{v:.3}")),
        m.r2_s.map_or("NA".into(), |v| format!("{v:.3}")),
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_evolve(
    cfg: &ExperimentConfig,
    level_path: &Path,
    model_path: &Path,
    target: Option<String>,
    dt: Option<f64>,
    ds: Option<f64>,
    out_dir: &Path,
    seed: Option<u64>,
) -> Result<()> {
    let level = load_level(level_path)?;
    let model = load_model(model_path)
        .with_context(|| format!("loading {}", model_path.display()))?;
    let (desired, label) = match (target, dt, ds) {
        (Some(name), None, None) => {
            let preset = TargetPreset::parse(&name)
                .ok_or_else(|| anyhow!("unknown target {name:?} (short, medium, long)"))?;
            (preset.desired(), preset.name().to_string())
        }
        (None, Some(dt), Some(ds)) => {
            if !(0.0..=1.0).contains(&dt) || !(0.0..=1.0).contains(&ds) {
                bail!("--dt and --ds must lie in [0, 1]");
            }
            (DesiredOutcome { d_t: dt, d_s: ds }, "custom".to_string())
        }
        _ => bail!("provide --target or both --dt and --ds"),
    };
    let seed = seed.unwrap_or_else(|| derive_seed(cfg.master_seed, "evolve", 0));
    let (result, pair) = evolve_pair(&model, &level, &desired, cfg, seed);
    let stem = level_path
        .file_stem()
        .ok_or_else(|| anyhow!("level path has no file name"))?
        .to_string_lossy();
    fs::create_dir_all(out_dir)?;
    let pair_path = out_dir.join(format!("{stem}__{label}.pair"));
    write_file(&pair_path, &render_pair(&pair))?;
    let trace_path = out_dir.join(format!("{stem}__{label}__trace.csv"));
    write_file(&trace_path, &result.trace_csv())?;
    println!(
        "wrote {} (best fitness {:.4}, seed {seed})",
        pair_path.display(),
        result.best_fitness
    );
    Ok(())
}

fn cmd_evaluate(
    cfg: &ExperimentConfig,
    level_paths: &[PathBuf],
    pairs_dir: &Path,
    model_path: &Path,
    out: &Path,
    id: &str,
) -> Result<()> {
    let model = load_model(model_path)
        .with_context(|| format!("loading {}", model_path.display()))?;
    let mut levels = Vec::new();
    for path in level_paths {
        let stem = path
            .file_stem()
            .ok_or_else(|| anyhow!("level path {} has no file name", path.display()))?
            .to_string_lossy()
            .to_string();
        levels.push((stem, load_level(path)?));
    }

    let mut pair_files: Vec<PathBuf> = fs::read_dir(pairs_dir)
        .with_context(|| format!("reading {}", pairs_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "pair"))
        .collect();
    pair_files.sort();
    if pair_files.is_empty() {
        bail!("no .pair files in {}", pairs_dir.display());
    }

    let mut requests = Vec::new();
    let mut skipped = Vec::new();
    for (run_index, path) in pair_files.iter().enumerate() {
        let stem = path.file_stem().unwrap().to_string_lossy();
        let Some((level_stem, target_name)) = stem.split_once("__") else {
            skipped.push(format!("{}: name is not <level>__<target>.pair", path.display()));
            continue;
        };
        let Some(target) = TargetPreset::parse(target_name) else {
            skipped.push(format!("{}: target {target_name:?} is not a preset", path.display()));
            continue;
        };
        let Some((_, level)) = levels.iter().find(|(s, _)| s == level_stem) else {
            skipped.push(format!("{}: no level named {level_stem} given", path.display()));
            continue;
        };
        let text = fs::read_to_string(path)?;
        let pair = parse_pair(&text).with_context(|| format!("parsing {}", path.display()))?;
        requests.push(EvalRequest {
            level_id: level_stem.to_string(),
            level: level.clone(),
            target,
            pair,
            run_index: run_index as u64,
        });
    }
    if requests.is_empty() {
        bail!("no usable pair files (skipped: {skipped:?})");
    }

    let runs = evaluate_runs(&model, &requests, cfg)?;
    fs::create_dir_all(out)?;
    let records: Vec<_> = runs.iter().map(accuracy_record).collect();
    write_file(&out.join(format!("{id}_accuracy.csv")), &accuracy_csv(&records))?;
    write_file(
        &out.join(format!("{id}_distances.csv")),
        &distance_csv(&distance_report(&runs)),
    )?;
    write_file(
        &out.join(format!("{id}_trends.csv")),
        &trend_csv(&trend_report(&runs)),
    )?;
    write_file(
        &out.join(format!("{id}_tf2.csv")),
        &tf2_csv(&tf2_report(&runs, &cfg.tf2_references, cfg.evaluate.tf2_threshold)),
    )?;
    let mut summary = summary_text(&runs);
    for s in &skipped {
        summary.push_str(&format!("skipped: {s}\n"));
    }
    write_file(&out.join(format!("{id}_summary.txt")), &summary)?;
    print!("{summary}");
    println!("reports written under {} with prefix {id}_", out.display());
    Ok(())
}
