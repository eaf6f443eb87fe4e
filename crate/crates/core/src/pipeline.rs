//! Pipeline orchestration shared by the command-line tool and the
//! acceptance suite: corpus building, model training, evolution runs and
//! the evaluation batch. Every stage seed is derived from the experiment
//! master seed, so whole experiments replay bit-identically.

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{ground_truth, EvaluatedRun, MapOrigin};
use crate::classes::{decode_genotype, denormalize, ClassError, ClassPair};
use crate::config::ExperimentConfig;
use crate::corpus::{build_corpus, split, Corpus, CorpusError};
use crate::evolve::{evolve, DesiredOutcome, LevelBoundModel, RunResult, TargetPreset};
use crate::level::Level;
use crate::rng::derive_seed;
use crate::sim::SimError;
use crate::surrogate::{train, Dataset, ModelKind, SurrogateModel, TrainError, TrainOutcome};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Class(#[from] ClassError),
}

/// Builds the corpus described by the config.
pub fn build_experiment_corpus(cfg: &ExperimentConfig) -> Result<Corpus, PipelineError> {
    Ok(build_corpus(
        cfg.corpus.n_configs,
        cfg.master_seed,
        &cfg.build_config(),
    )?)
}

/// Splits a corpus and trains one model kind on it.
pub fn train_on_corpus(
    corpus: &Corpus,
    kind: ModelKind,
    cfg: &ExperimentConfig,
) -> Result<TrainOutcome, PipelineError> {
    let split_seed = derive_seed(cfg.master_seed, "split", 0);
    let (train_set, val_set) = split(corpus, cfg.corpus.validation_fraction, split_seed)?;
    let mut train_cfg = cfg.train.clone();
    train_cfg.seed = derive_seed(cfg.master_seed, "train", kind as u64);
    let train_data = Dataset::from_samples(&train_set.samples);
    let val_data = Dataset::from_samples(&val_set.samples);
    Ok(train(kind, &train_data, &val_data, &train_cfg)?)
}

/// One evolution run of a class pair for (level, target), using a derived
/// or explicit seed.
pub fn evolve_pair(
    model: &SurrogateModel,
    level: &Level,
    target: &DesiredOutcome,
    cfg: &ExperimentConfig,
    seed: u64,
) -> (RunResult, ClassPair) {
    let channels = level.encode();
    let bound = LevelBoundModel::new(model, &channels);
    let mut evo_cfg = cfg.evolution.clone();
    evo_cfg.seed = seed;
    let result = evolve(&bound, target, &evo_cfg);
    let pair = decode_genotype(&result.best).expect("evolved genotypes stay valid");
    (result, pair)
}

/// A (level, target) evaluation request.
pub struct EvalRequest {
    pub level_id: String,
    pub level: Level,
    pub target: TargetPreset,
    pub pair: ClassPair,
    /// Seed namespace for the ground-truth simulations.
    pub run_index: u64,
}

/// Ground-truths each evolved pair and bundles everything the reports need.
/// Requests run in parallel; output order matches input order.
pub fn evaluate_runs(
    model: &SurrogateModel,
    requests: &[EvalRequest],
    cfg: &ExperimentConfig,
) -> Result<Vec<EvaluatedRun>, PipelineError> {
    let results: Vec<Result<EvaluatedRun, PipelineError>> = requests
        .par_iter()
        .map(|req| {
            let channels = req.level.encode();
            let genotype = crate::classes::encode_genotype(&req.pair);
            let prediction = model.predict(&channels, &genotype.to_f32());
            let p1 = denormalize(&req.pair.player1, &cfg.ranges);
            let p2 = denormalize(&req.pair.player2, &cfg.ranges);
            let gt_master = derive_seed(cfg.master_seed, "ground-truth", req.run_index);
            let seeds: Vec<u64> = (0..cfg.evaluate.ground_truth_matches as u64)
                .map(|k| derive_seed(gt_master, "sim", k))
                .collect();
            let stats = ground_truth(&req.level, &p1, &p2, &seeds, &cfg.match_config)?;
            Ok(EvaluatedRun {
                level_id: req.level_id.clone(),
                origin: MapOrigin::from_level_name(&req.level_id),
                target: req.target,
                desired: req.target.desired(),
                prediction,
                stats,
                pair: req.pair,
            })
        })
        .collect();
    results.into_iter().collect()
}
