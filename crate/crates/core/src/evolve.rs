//! Genetic algorithm over 16-gene class pairs, evaluated by a surrogate
//! model on one fixed level.
//!
//! Fitness is the Euclidean distance between the clamped model predictions
//! and the designer target (duration, score), minimized. Selection is
//! roulette-wheel on max-shifted fitness, crossover is one-point with a 20%
//! per-pair chance, and every gene mutates independently with 10% chance
//! (gaussian for continuous genes, a different category for range genes).

use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::classes::{Genotype, WeaponRange, GENES};
use crate::level::ChannelStack;
use crate::rng::{stream, Stream};
use crate::surrogate::{LevelCtx, Prediction, SurrogateModel};

/// Designer target: desired normalized duration and score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesiredOutcome {
    pub d_t: f64,
    pub d_s: f64,
}

/// The three duration presets, all targeting a balanced score of 0.5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetPreset {
    /// 200 seconds.
    Short,
    /// 300 seconds.
    Medium,
    /// 600 seconds.
    Long,
}

impl TargetPreset {
    pub const ALL: [TargetPreset; 3] = [TargetPreset::Short, TargetPreset::Medium, TargetPreset::Long];

    pub fn desired(self) -> DesiredOutcome {
        let d_t = match self {
            TargetPreset::Short => 0.11,
            TargetPreset::Medium => 0.33,
            TargetPreset::Long => 1.00,
        };
        DesiredOutcome { d_t, d_s: 0.5 }
    }

    pub fn name(self) -> &'static str {
        match self {
            TargetPreset::Short => "short",
            TargetPreset::Medium => "medium",
            TargetPreset::Long => "long",
        }
    }

    pub fn parse(s: &str) -> Option<TargetPreset> {
        TargetPreset::ALL.into_iter().find(|p| p.name() == s)
    }
}

/// GA parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub mutation_sigma: f64,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population: 100,
            generations: 100,
            crossover_prob: 0.2,
            mutation_prob: 0.1,
            mutation_sigma: 0.1,
            seed: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.population == 0 || !self.population.is_multiple_of(2) {
            return Err(format!("population {} must be even and > 0", self.population));
        }
        if self.generations == 0 {
            return Err("generations must be > 0".into());
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} = {p} not in [0,1]"));
            }
        }
        Ok(())
    }
}

/// Outcome of one evolutionary run.
#[derive(Debug, Clone)]
pub struct RunResult {
    /// Best-ever genotype across all generations.
    pub best: Genotype,
    pub best_fitness: f64,
    /// Per-generation (best-ever, population mean) fitness.
    pub trace: Vec<(f64, f64)>,
}

impl RunResult {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("generation,best_ever,mean\n");
        for (g, (best, mean)) in self.trace.iter().enumerate() {
            out.push_str(&format!("{g},{best},{mean}\n"));
        }
        out
    }
}

/// Anything that predicts gameplay outcomes for genotypes on a fixed level.
/// Implemented by the trained surrogate and by test stubs.
pub trait GenotypeEvaluator: Sync {
    fn predict_genotype(&self, genotype: &Genotype) -> Prediction;
}

/// The surrogate bound to one level's precomputed features.
pub struct LevelBoundModel<'a> {
    model: &'a SurrogateModel,
    ctx: LevelCtx,
}

impl<'a> LevelBoundModel<'a> {
    pub fn new(model: &'a SurrogateModel, channels: &ChannelStack) -> LevelBoundModel<'a> {
        LevelBoundModel {
            model,
            ctx: model.level_context(channels),
        }
    }
}

impl GenotypeEvaluator for LevelBoundModel<'_> {
    fn predict_genotype(&self, genotype: &Genotype) -> Prediction {
        self.model.predict_with(&self.ctx, &genotype.to_f32())
    }
}

/// Test stub: reads genes 0 and 1 straight back as (duration, score),
/// decoupling the GA machinery from any network.
pub struct IdentityStub;

impl GenotypeEvaluator for IdentityStub {
    fn predict_genotype(&self, genotype: &Genotype) -> Prediction {
        Prediction {
            p_t: genotype.genes()[0],
            p_s: genotype.genes()[1],
        }
    }
}

/// Distance fitness, minimized: sqrt((t - d_t)^2 + (s - d_s)^2).
pub fn fitness(t_clamped: f64, s_clamped: f64, target: &DesiredOutcome) -> f64 {
    let dt = t_clamped - target.d_t;
    let ds = s_clamped - target.d_s;
    (dt * dt + ds * ds).sqrt()
}

/// Fitness of every genotype: decode, predict, clamp, distance.
pub fn evaluate_population<E: GenotypeEvaluator>(
    evaluator: &E,
    genotypes: &[Genotype],
    target: &DesiredOutcome,
) -> Vec<f64> {
    use rayon::prelude::*;
    genotypes
        .par_iter()
        .map(|g| {
            let p = evaluator.predict_genotype(g);
            fitness(p.t_clamped(), p.s_clamped(), target)
        })
        .collect()
}

/// Roulette-wheel selection for a minimized fitness: weights are
/// `(f_max - f_i) + eps` with `eps = 1e-6 * (1 + f_max)`. Samples `count`
/// indices with replacement.
pub fn roulette_select(fitness: &[f64], count: usize, rng: &mut Stream) -> Vec<usize> {
    assert!(!fitness.is_empty() && count >= 1);
    debug_assert!(fitness.iter().all(|f| f.is_finite()));
    let f_max = fitness.iter().fold(f64::MIN, |a, &b| a.max(b));
    let eps = 1e-6 * (1.0 + f_max);
    let mut cumulative = Vec::with_capacity(fitness.len());
    let mut total = 0.0;
    for &f in fitness {
        total += (f_max - f) + eps;
        cumulative.push(total);
    }
    (0..count)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            cumulative.partition_point(|&c| c <= u).min(fitness.len() - 1)
        })
        .collect()
}

/// One-point crossover at `point` (1..=15): children exchange gene suffixes.
pub fn one_point_crossover(a: &Genotype, b: &Genotype, point: usize) -> (Genotype, Genotype) {
    assert!((1..GENES).contains(&point));
    let mut c1 = a.0;
    let mut c2 = b.0;
    c1[point..].copy_from_slice(&b.0[point..]);
    c2[point..].copy_from_slice(&a.0[point..]);
    (Genotype(c1), Genotype(c2))
}

/// Per-gene mutation: continuous genes perturb by a clamped gaussian with
/// probability `mutation_prob`; range genes switch to a uniformly chosen
/// different category with the same probability.
pub fn mutate(g: &Genotype, cfg: &EvolutionConfig, rng: &mut Stream) -> Genotype {
    let normal = Normal::new(0.0, cfg.mutation_sigma).expect("sigma >= 0");
    let mut genes = g.0;
    for (i, gene) in genes.iter_mut().enumerate() {
        if rng.random::<f64>() >= cfg.mutation_prob {
            continue;
        }
        if Genotype::is_range_gene(i) {
            let current = WeaponRange::from_embed(*gene).expect("valid range gene");
            let others: Vec<WeaponRange> = WeaponRange::ALL
                .into_iter()
                .filter(|r| *r != current)
                .collect();
            *gene = others[rng.random_range(0..others.len())].embed();
        } else {
            *gene = (*gene + rng.sample(normal)).clamp(0.0, 1.0);
        }
    }
    Genotype(genes)
}

/// Uniform random genotype (random class parameters for both players).
pub fn random_genotype(rng: &mut Stream) -> Genotype {
    let mut genes = [0.0f64; GENES];
    for (i, g) in genes.iter_mut().enumerate() {
        if Genotype::is_range_gene(i) {
            *g = WeaponRange::ALL[rng.random_range(0..3)].embed();
        } else {
            *g = rng.random();
        }
    }
    Genotype(genes)
}

/// Full evolutionary run. Population evaluation is parallel; all random
/// draws come from one seeded stream in a fixed order, so the result is
/// reproducible for any worker count.
pub fn evolve<E: GenotypeEvaluator>(
    evaluator: &E,
    target: &DesiredOutcome,
    cfg: &EvolutionConfig,
) -> RunResult {
    cfg.validate().expect("valid evolution config");
    let mut rng = stream(cfg.seed);
    let mut population: Vec<Genotype> =
        (0..cfg.population).map(|_| random_genotype(&mut rng)).collect();

    let mut best: Option<(f64, Genotype)> = None;
    let mut trace = Vec::with_capacity(cfg.generations);
    for generation in 0..cfg.generations {
        let fits = evaluate_population(evaluator, &population, target);
        for (g, &f) in population.iter().zip(fits.iter()) {
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((f, g.clone()));
            }
        }
        let (best_fit, _) = best.as_ref().unwrap();
        let mean = fits.iter().sum::<f64>() / fits.len() as f64;
        trace.push((*best_fit, mean));
        if generation + 1 == cfg.generations {
            break;
        }

        let parents = roulette_select(&fits, cfg.population, &mut rng);
        let mut next = Vec::with_capacity(cfg.population);
        for pair in parents.chunks(2) {
            let (pa, pb) = (&population[pair[0]], &population[pair[1]]);
            let (mut c1, mut c2) = (pa.clone(), pb.clone());
            if rng.random::<f64>() < cfg.crossover_prob {
                let point = rng.random_range(1..GENES);
                let (x1, x2) = one_point_crossover(&c1, &c2, point);
                c1 = x1;
                c2 = x2;
            }
            next.push(mutate(&c1, cfg, &mut rng));
            next.push(mutate(&c2, cfg, &mut rng));
        }
        population = next;
    }

    let (best_fitness, best) = best.unwrap();
    RunResult {
        best,
        best_fitness,
        trace,
    }
}
