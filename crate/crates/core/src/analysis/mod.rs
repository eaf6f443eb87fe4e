//! Ground-truth validation of evolved class pairs and the report suite:
//! accuracy against confidence bounds, distance tables, parameter trends,
//! TF2 label distributions and correlation statistics.

mod stats;

pub use stats::{
    incomplete_beta, ln_gamma, mean, mean_ci95, pearson, population_std, sample_variance, t_cdf,
    t_critical_975, welch_test, StatsError, WelchTest,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classes::{
    match_tf2, ClassPair, Tf2Reference, PARAMS_PER_CLASS, PARAM_NAMES,
};
use crate::corpus::normalize_duration;
use crate::evolve::{DesiredOutcome, TargetPreset};
use crate::level::Level;
use crate::sim::{simulate_match, MatchConfig, SimError};
use crate::surrogate::Prediction;
use crate::classes::PhysicalClass;

/// Mean gameplay metrics over repeated simulations with 95% confidence
/// half-widths (t distribution, n - 1 degrees of freedom).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthStats {
    /// Mean normalized duration.
    pub a_t: f64,
    /// Mean score.
    pub a_s: f64,
    pub ci_t: f64,
    pub ci_s: f64,
    pub n: usize,
}

/// Simulates the pair `n` times (one seed each) and aggregates. Incomplete
/// matches contribute the time limit as their duration and their realized
/// score.
pub fn ground_truth(
    level: &Level,
    player1: &PhysicalClass,
    player2: &PhysicalClass,
    seeds: &[u64],
    cfg: &MatchConfig,
) -> Result<GroundTruthStats, SimError> {
    assert!(seeds.len() >= 2, "need at least two simulations");
    let outcomes: Vec<Result<(f64, f64), SimError>> = seeds
        .par_iter()
        .map(|&seed| {
            let out = simulate_match(level, player1, player2, seed, cfg)?;
            let duration = if out.completed {
                out.duration_s
            } else {
                cfg.time_limit_s
            };
            Ok((normalize_duration(duration), out.score))
        })
        .collect();
    let mut durations = Vec::with_capacity(seeds.len());
    let mut scores = Vec::with_capacity(seeds.len());
    for o in outcomes {
        let (t, s) = o?;
        durations.push(t);
        scores.push(s);
    }
    let (a_t, ci_t) = mean_ci95(&durations).expect("n >= 2");
    let (a_s, ci_s) = mean_ci95(&scores).expect("n >= 2");
    Ok(GroundTruthStats {
        a_t,
        a_s,
        ci_t,
        ci_s,
        n: seeds.len(),
    })
}

/// CI containment per metric: a prediction is accurate iff it lies inside
/// the closed interval [mean - ci, mean + ci].
pub fn accuracy(p_t: f64, p_s: f64, stats: &GroundTruthStats) -> (bool, bool) {
    let duration_ok = p_t >= stats.a_t - stats.ci_t && p_t <= stats.a_t + stats.ci_t;
    let score_ok = p_s >= stats.a_s - stats.ci_s && p_s <= stats.a_s + stats.ci_s;
    (duration_ok, score_ok)
}

/// Whether a level was human-designed or came from the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapOrigin {
    Generated,
    Designed,
}

impl MapOrigin {
    pub fn name(self) -> &'static str {
        match self {
            MapOrigin::Generated => "generated",
            MapOrigin::Designed => "designed",
        }
    }

    /// Convention used by the evaluation pipeline: level file names starting
    /// with 'd' (case-insensitive) count as designed, everything else as
    /// generated.
    pub fn from_level_name(name: &str) -> MapOrigin {
        if name.to_ascii_lowercase().starts_with('d') {
            MapOrigin::Designed
        } else {
            MapOrigin::Generated
        }
    }
}

/// One evolved-and-validated run: everything the reports need.
#[derive(Debug, Clone)]
pub struct EvaluatedRun {
    pub level_id: String,
    pub origin: MapOrigin,
    pub target: TargetPreset,
    pub desired: DesiredOutcome,
    /// Surrogate prediction for the winning pair (raw).
    pub prediction: Prediction,
    pub stats: GroundTruthStats,
    pub pair: ClassPair,
}

/// Accuracy flags and distances for one run.
#[derive(Debug, Clone)]
pub struct AccuracyRecord {
    pub level_id: String,
    pub origin: MapOrigin,
    pub target: TargetPreset,
    pub duration_accurate: bool,
    pub score_accurate: bool,
    pub dist_desired_t: f64,
    pub dist_desired_s: f64,
    pub dist_desired_euclid: f64,
    pub dist_predicted_t: f64,
    pub dist_predicted_s: f64,
    pub dist_predicted_euclid: f64,
}

pub fn accuracy_record(run: &EvaluatedRun) -> AccuracyRecord {
    let p_t = run.prediction.t_clamped();
    let p_s = run.prediction.s_clamped();
    let (duration_accurate, score_accurate) = accuracy(p_t, p_s, &run.stats);
    let dd_t = (run.stats.a_t - run.desired.d_t).abs();
    let dd_s = (run.stats.a_s - run.desired.d_s).abs();
    let dp_t = (run.stats.a_t - p_t).abs();
    let dp_s = (run.stats.a_s - p_s).abs();
    AccuracyRecord {
        level_id: run.level_id.clone(),
        origin: run.origin,
        target: run.target,
        duration_accurate,
        score_accurate,
        dist_desired_t: dd_t,
        dist_desired_s: dd_s,
        dist_desired_euclid: (dd_t * dd_t + dd_s * dd_s).sqrt(),
        dist_predicted_t: dp_t,
        dist_predicted_s: dp_s,
        dist_predicted_euclid: (dp_t * dp_t + dp_s * dp_s).sqrt(),
    }
}

pub fn accuracy_csv(records: &[AccuracyRecord]) -> String {
    let mut out = String::from(
        "level,origin,target,duration_accurate,score_accurate,\
         at_dt,as_ds,euclid_desired,at_pt,as_ps,euclid_predicted\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.level_id,
            r.origin.name(),
            r.target.name(),
            r.duration_accurate,
            r.score_accurate,
            r.dist_desired_t,
            r.dist_desired_s,
            r.dist_desired_euclid,
            r.dist_predicted_t,
            r.dist_predicted_s,
            r.dist_predicted_euclid
        ));
    }
    out
}

/// One row of the distance table: mean +/- population std of the six
/// distance columns over a (duration class, map class) group.
#[derive(Debug, Clone)]
pub struct DistanceRow {
    pub duration: String,
    pub maps: String,
    pub n: usize,
    /// (mean, std) for |a_t-d_t|, |a_s-d_s|, euclid(a,d), |a_t-p_t|,
    /// |a_s-p_s|, euclid(a,p).
    pub cells: [(f64, f64); 6],
}

#[derive(Debug, Clone, Default)]
pub struct DistanceReport {
    pub rows: Vec<DistanceRow>,
    /// Groups omitted because they had no runs.
    pub omitted: Vec<String>,
}

/// Distance table grouped by target preset and map origin, with Both and
/// Total aggregations.
pub fn distance_report(runs: &[EvaluatedRun]) -> DistanceReport {
    let records: Vec<(TargetPreset, MapOrigin, AccuracyRecord)> = runs
        .iter()
        .map(|r| (r.target, r.origin, accuracy_record(r)))
        .collect();
    let mut report = DistanceReport::default();
    let mut add_group = |duration: Option<TargetPreset>, maps: Option<MapOrigin>, label_d: &str, label_m: &str| {
        let group: Vec<&AccuracyRecord> = records
            .iter()
            .filter(|(t, o, _)| duration.is_none_or(|d| *t == d) && maps.is_none_or(|m| *o == m))
            .map(|(_, _, r)| r)
            .collect();
        if group.is_empty() {
            report.omitted.push(format!("{label_d}/{label_m}"));
            return;
        }
        let cell = |f: fn(&AccuracyRecord) -> f64| -> (f64, f64) {
            let values: Vec<f64> = group.iter().map(|r| f(r)).collect();
            (mean(&values), population_std(&values))
        };
        report.rows.push(DistanceRow {
            duration: label_d.to_string(),
            maps: label_m.to_string(),
            n: group.len(),
            cells: [
                cell(|r| r.dist_desired_t),
                cell(|r| r.dist_desired_s),
                cell(|r| r.dist_desired_euclid),
                cell(|r| r.dist_predicted_t),
                cell(|r| r.dist_predicted_s),
                cell(|r| r.dist_predicted_euclid),
            ],
        });
    };
    for preset in TargetPreset::ALL {
        add_group(Some(preset), Some(MapOrigin::Designed), preset.name(), "designed");
        add_group(Some(preset), Some(MapOrigin::Generated), preset.name(), "generated");
        add_group(Some(preset), None, preset.name(), "both");
    }
    add_group(None, None, "total", "both");
    report
}

pub fn distance_csv(report: &DistanceReport) -> String {
    let mut out = String::from(
        "duration,maps,n,at_dt_mean,at_dt_std,as_ds_mean,as_ds_std,\
         euclid_d_mean,euclid_d_std,at_pt_mean,at_pt_std,as_ps_mean,as_ps_std,\
         euclid_p_mean,euclid_p_std\n",
    );
    for r in &report.rows {
        out.push_str(&format!("{},{},{}", r.duration, r.maps, r.n));
        for (m, s) in r.cells {
            out.push_str(&format!(",{m},{s}"));
        }
        out.push('\n');
    }
    for o in &report.omitted {
        out.push_str(&format!("# omitted empty group: {o}\n"));
    }
    out
}

/// Mean and 95% CI of one class parameter in one (target, player) group.
#[derive(Debug, Clone)]
pub struct TrendRow {
    pub target: TargetPreset,
    pub player: usize,
    pub param: &'static str,
    pub mean: f64,
    pub ci95: f64,
    pub n: usize,
}

/// Per-parameter averages of the evolved classes, grouped by duration class
/// and player. Range genes enter with their numeric embedding. Groups with
/// fewer than two runs are skipped.
pub fn trend_report(runs: &[EvaluatedRun]) -> Vec<TrendRow> {
    let mut rows = Vec::new();
    for preset in TargetPreset::ALL {
        let group: Vec<&EvaluatedRun> = runs.iter().filter(|r| r.target == preset).collect();
        if group.len() < 2 {
            continue;
        }
        for player in 0..2 {
            for p in 0..PARAMS_PER_CLASS {
                let values: Vec<f64> = group
                    .iter()
                    .map(|r| {
                        let class = if player == 0 {
                            &r.pair.player1
                        } else {
                            &r.pair.player2
                        };
                        class.to_vector()[p]
                    })
                    .collect();
                let (m, ci) = mean_ci95(&values).expect("group length >= 2");
                rows.push(TrendRow {
                    target: preset,
                    player,
                    param: PARAM_NAMES[p],
                    mean: m,
                    ci95: ci,
                    n: values.len(),
                });
            }
        }
    }
    rows
}

pub fn trend_csv(rows: &[TrendRow]) -> String {
    let mut out = String::from("target,player,param,mean,ci95,n\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.target.name(),
            r.player + 1,
            r.param,
            r.mean,
            r.ci95,
            r.n
        ));
    }
    out
}

/// Label counts per (target, player).
#[derive(Debug, Clone)]
pub struct Tf2Row {
    pub target: TargetPreset,
    pub player: usize,
    pub label: String,
    pub count: usize,
}

/// Nearest-TF2-class distribution of the evolved classes.
pub fn tf2_report(runs: &[EvaluatedRun], refs: &[Tf2Reference], threshold: f64) -> Vec<Tf2Row> {
    let mut rows = Vec::new();
    for preset in TargetPreset::ALL {
        let group: Vec<&EvaluatedRun> = runs.iter().filter(|r| r.target == preset).collect();
        if group.is_empty() {
            continue;
        }
        for player in 0..2 {
            let mut counts: std::collections::BTreeMap<String, usize> = Default::default();
            for r in &group {
                let class = if player == 0 {
                    &r.pair.player1
                } else {
                    &r.pair.player2
                };
                let (label, _) = match_tf2(class, refs, threshold);
                *counts.entry(label.name().to_string()).or_default() += 1;
            }
            for (label, count) in counts {
                rows.push(Tf2Row {
                    target: preset,
                    player,
                    label,
                    count,
                });
            }
        }
    }
    rows
}

pub fn tf2_csv(rows: &[Tf2Row]) -> String {
    let mut out = String::from("target,player,label,count\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.target.name(),
            r.player + 1,
            r.label,
            r.count
        ));
    }
    out
}

/// Human-readable digest of one evaluation batch.
pub fn summary_text(runs: &[EvaluatedRun]) -> String {
    let records: Vec<AccuracyRecord> = runs.iter().map(accuracy_record).collect();
    let n = records.len();
    let dur_ok = records.iter().filter(|r| r.duration_accurate).count();
    let score_ok = records.iter().filter(|r| r.score_accurate).count();
    let mut out = String::new();
    out.push_str(&format!("runs evaluated: {n}\n"));
    if n > 0 {
        out.push_str(&format!(
            "duration predictions inside the 95% ground-truth bounds: {dur_ok} of {n}\n"
        ));
        out.push_str(&format!(
            "score predictions inside the 95% ground-truth bounds: {score_ok} of {n}\n"
        ));
    }
    // Welch comparison of ground-truth durations across duration classes
    let durations = |preset: TargetPreset| -> Vec<f64> {
        runs.iter()
            .filter(|r| r.target == preset)
            .map(|r| r.stats.a_t)
            .collect()
    };
    let long = durations(TargetPreset::Long);
    let short = durations(TargetPreset::Short);
    if long.len() >= 2 && short.len() >= 2 {
        if let Ok(test) = welch_test(&long, &short) {
            out.push_str(&format!(
                "mean GT duration long vs short: {:.3} vs {:.3} (welch t={:.2}, df={:.1}, significant at 95%: {})\n",
                mean(&long),
                mean(&short),
                test.t,
                test.df,
                test.significant_95
            ));
        }
    }
    for row in distance_report(runs).rows {
        out.push_str(&format!(
            "dist {}/{} (n={}): |at-dt| {:.3}±{:.3}, |as-ds| {:.3}±{:.3}, euclid(d) {:.3}±{:.3}, |at-pt| {:.3}±{:.3}, |as-ps| {:.3}±{:.3}, euclid(p) {:.3}±{:.3}\n",
            row.duration,
            row.maps,
            row.n,
            row.cells[0].0, row.cells[0].1,
            row.cells[1].0, row.cells[1].1,
            row.cells[2].0, row.cells[2].1,
            row.cells[3].0, row.cells[3].1,
            row.cells[4].0, row.cells[4].1,
            row.cells[5].0, row.cells[5].1,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{default_tf2_references, denormalize, random_class, ParamRanges, TF2_THRESHOLD};
    use crate::level::{generate_level, GeneratorConfig};
    use crate::rng::stream;

    fn fake_stats(a_t: f64, a_s: f64, ci: f64) -> GroundTruthStats {
        GroundTruthStats {
            a_t,
            a_s,
            ci_t: ci,
            ci_s: ci,
            n: 10,
        }
    }

    fn fake_run(
        level_id: &str,
        target: TargetPreset,
        a_t: f64,
        a_s: f64,
        ci: f64,
        p_t: f64,
        p_s: f64,
    ) -> EvaluatedRun {
        let mut rng = stream(1);
        EvaluatedRun {
            level_id: level_id.to_string(),
            origin: MapOrigin::from_level_name(level_id),
            target,
            desired: target.desired(),
            prediction: Prediction { p_s, p_t },
            stats: fake_stats(a_t, a_s, ci),
            pair: ClassPair {
                player1: random_class(&mut rng),
                player2: random_class(&mut rng),
            },
        }
    }

    #[test]
    fn accuracy_containment_cases() {
        let stats = fake_stats(0.5, 0.5, 0.1);
        // center is accurate
        assert_eq!(accuracy(0.5, 0.5, &stats), (true, true));
        // just past the boundary is not
        assert_eq!(accuracy(0.5, 0.61, &stats).1, false);
        // exactly on the boundary is accurate (closed interval)
        assert_eq!(accuracy(0.6, 0.4, &stats), (true, true));
        // zero-variance stats: only the exact mean is accurate
        let tight = fake_stats(0.5, 0.5, 0.0);
        assert_eq!(accuracy(0.5, 0.5, &tight), (true, true));
        assert_eq!(accuracy(0.5001, 0.5, &tight).0, false);
    }

    #[test]
    fn ground_truth_zero_variance_when_seeds_repeat() {
        let level = generate_level(3, &GeneratorConfig::default()).unwrap();
        let ranges = ParamRanges::default();
        let mut rng = stream(5);
        let p1 = denormalize(&random_class(&mut rng), &ranges);
        let p2 = denormalize(&random_class(&mut rng), &ranges);
        let cfg = MatchConfig::default();
        let stats = ground_truth(&level, &p1, &p2, &[7, 7, 7, 7], &cfg).unwrap();
        assert_eq!(stats.ci_t, 0.0);
        assert_eq!(stats.ci_s, 0.0);
        assert_eq!(stats.n, 4);
    }

    #[test]
    fn mean_score_of_two_values_is_their_midpoint() {
        let (m, _) = mean_ci95(&[0.4, 0.6]).unwrap();
        assert!((m - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exact_run_produces_zero_distance_rows() {
        let run = fake_run("g1", TargetPreset::Medium, 0.33, 0.5, 0.05, 0.33, 0.5);
        let rec = accuracy_record(&run);
        assert!(rec.dist_desired_t.abs() < 1e-12);
        assert!(rec.dist_desired_euclid < 1e-12);
        assert!(rec.duration_accurate && rec.score_accurate);
        let report = distance_report(&[run]);
        let medium_row = report
            .rows
            .iter()
            .find(|r| r.duration == "medium" && r.maps == "both")
            .unwrap();
        assert!(medium_row.cells[2].0 < 1e-12);
        // single run: std 0
        assert_eq!(medium_row.cells[0].1, 0.0);
    }

    #[test]
    fn euclid_cell_is_bounded_by_axis_cells() {
        let runs = vec![
            fake_run("g1", TargetPreset::Short, 0.4, 0.55, 0.1, 0.2, 0.5),
            fake_run("d1", TargetPreset::Short, 0.5, 0.45, 0.1, 0.3, 0.6),
            fake_run("g2", TargetPreset::Long, 0.9, 0.5, 0.1, 0.8, 0.5),
        ];
        let report = distance_report(&runs);
        for row in &report.rows {
            for (m, s) in row.cells {
                assert!(m >= 0.0 && s >= 0.0);
            }
            assert!(row.cells[2].0 <= row.cells[0].0 + row.cells[1].0 + 1e-12);
            assert!(row.cells[5].0 <= row.cells[3].0 + row.cells[4].0 + 1e-12);
        }
        // empty groups (medium) are omitted with a note
        assert!(report.omitted.iter().any(|o| o.contains("medium")));
    }

    #[test]
    fn origin_convention_follows_the_level_name() {
        assert_eq!(MapOrigin::from_level_name("d01"), MapOrigin::Designed);
        assert_eq!(MapOrigin::from_level_name("D3"), MapOrigin::Designed);
        assert_eq!(MapOrigin::from_level_name("g1"), MapOrigin::Generated);
        assert_eq!(MapOrigin::from_level_name("level7"), MapOrigin::Generated);
    }

    #[test]
    fn trend_report_identical_groups_have_zero_ci() {
        let run = fake_run("g1", TargetPreset::Short, 0.2, 0.5, 0.1, 0.2, 0.5);
        let mut run2 = run.clone();
        run2.level_id = "g2".to_string();
        let rows = trend_report(&[run.clone(), run2]);
        assert_eq!(rows.len(), 2 * PARAMS_PER_CLASS);
        for r in &rows {
            assert_eq!(r.ci95, 0.0, "identical classes give zero-width CIs");
            assert_eq!(r.n, 2);
        }
        // a group of clamped-at-1 genes averages to exactly 1
        let mut clamped = run.clone();
        clamped.pair.player1.hit_points = 1.0;
        let mut clamped2 = clamped.clone();
        clamped2.level_id = "g3".to_string();
        let rows = trend_report(&[clamped, clamped2]);
        let hp = rows
            .iter()
            .find(|r| r.player == 0 && r.param == "hp")
            .unwrap();
        assert_eq!(hp.mean, 1.0);
    }

    #[test]
    fn tf2_report_counts_sum_to_group_sizes() {
        let refs = default_tf2_references();
        let runs = vec![
            fake_run("g1", TargetPreset::Short, 0.2, 0.5, 0.1, 0.2, 0.5),
            fake_run("g2", TargetPreset::Short, 0.3, 0.5, 0.1, 0.2, 0.5),
            fake_run("d1", TargetPreset::Long, 0.9, 0.5, 0.1, 0.9, 0.5),
        ];
        let rows = tf2_report(&runs, &refs, TF2_THRESHOLD);
        for preset in [TargetPreset::Short, TargetPreset::Long] {
            for player in 0..2 {
                let total: usize = rows
                    .iter()
                    .filter(|r| r.target == preset && r.player == player)
                    .map(|r| r.count)
                    .sum();
                let expect = runs.iter().filter(|r| r.target == preset).count();
                assert_eq!(total, expect);
            }
        }
    }

    #[test]
    fn heavy_pair_counts_as_heavy_for_both_players() {
        let refs = default_tf2_references();
        let heavy = refs
            .iter()
            .find(|r| r.label == crate::classes::Tf2Label::Heavy)
            .unwrap();
        let class = crate::classes::CharacterClass::from_vector(&heavy.vector).unwrap();
        let mut run = fake_run("g1", TargetPreset::Long, 0.9, 0.5, 0.1, 0.9, 0.5);
        run.pair = ClassPair {
            player1: class,
            player2: class,
        };
        let rows = tf2_report(&[run], &refs, TF2_THRESHOLD);
        for player in 0..2 {
            let heavy_count: usize = rows
                .iter()
                .filter(|r| r.player == player && r.label == "heavy")
                .map(|r| r.count)
                .sum();
            assert_eq!(heavy_count, 1, "player {player}");
        }
    }

    #[test]
    fn tf2_report_flags_far_classes_undefined() {
        let refs = default_tf2_references();
        let mut run = fake_run("g1", TargetPreset::Short, 0.2, 0.5, 0.1, 0.2, 0.5);
        // a parameter-cube corner beyond 1.5 of every reference
        run.pair.player1 = crate::classes::CharacterClass {
            hit_points: 1.0,
            speed: 0.0,
            damage: 0.0,
            accuracy: 1.0,
            rate_of_fire: 0.0,
            clip_size: 1.0,
            bullets_per_shot: 1.0,
            weapon_range: crate::classes::WeaponRange::Long,
        };
        let mut run2 = run.clone();
        run2.level_id = "g2".into();
        let rows = tf2_report(&[run, run2], &refs, TF2_THRESHOLD);
        let undefined: usize = rows
            .iter()
            .filter(|r| r.player == 0 && r.label == "undefined")
            .map(|r| r.count)
            .sum();
        assert_eq!(undefined, 2);
    }

    #[test]
    fn reports_are_pure_functions_of_inputs() {
        let runs = vec![
            fake_run("g1", TargetPreset::Short, 0.4, 0.55, 0.1, 0.2, 0.5),
            fake_run("d1", TargetPreset::Long, 0.9, 0.5, 0.1, 0.8, 0.5),
        ];
        let refs = default_tf2_references();
        assert_eq!(distance_csv(&distance_report(&runs)), distance_csv(&distance_report(&runs)));
        assert_eq!(trend_csv(&trend_report(&runs)), trend_csv(&trend_report(&runs)));
        assert_eq!(
            tf2_csv(&tf2_report(&runs, &refs, 1.5)),
            tf2_csv(&tf2_report(&runs, &refs, 1.5))
        );
        assert_eq!(summary_text(&runs), summary_text(&runs));
    }
}
