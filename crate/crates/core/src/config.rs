//! Experiment configuration: one TOML file drives every pipeline stage.
//! Missing sections fall back to the documented defaults, so an empty file
//! (or none at all) is a valid desk-scale experiment.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classes::{default_tf2_references, ParamRanges, Tf2Reference, TF2_THRESHOLD};
use crate::corpus::BuildConfig;
use crate::evolve::EvolutionConfig;
use crate::level::GeneratorConfig;
use crate::sim::MatchConfig;
use crate::surrogate::TrainConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Corpus-stage settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    /// Level/class configurations to simulate (two matches each).
    pub n_configs: u64,
    /// Fraction of samples held out for validation.
    pub validation_fraction: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            n_configs: 2500,
            validation_fraction: 0.1,
        }
    }
}

/// Evaluation-stage settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluateConfig {
    /// Ground-truth simulations per evolved pair.
    pub ground_truth_matches: usize,
    /// TF2 matching distance threshold.
    pub tf2_threshold: f64,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig {
            ground_truth_matches: 10,
            tf2_threshold: TF2_THRESHOLD,
        }
    }
}

/// The whole experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub generator: GeneratorConfig,
    pub ranges: ParamRanges,
    #[serde(rename = "match")]
    pub match_config: MatchConfig,
    pub corpus: CorpusConfig,
    pub train: TrainConfig,
    pub evolution: EvolutionConfig,
    pub evaluate: EvaluateConfig,
    /// TF2 reference archetypes; defaults are implementer estimates.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tf2_references: Vec<Tf2Reference>,
}

impl ExperimentConfig {
    /// Loads a TOML config file.
    pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.fill_defaults();
        cfg.validate()?;
        Ok(cfg)
    }

    fn fill_defaults(&mut self) {
        if self.tf2_references.is_empty() {
            self.tf2_references = default_tf2_references();
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.generator
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.ranges
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.match_config
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.train
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.evolution
            .validate()
            .map_err(ConfigError::Invalid)?;
        if self.corpus.n_configs == 0 {
            return Err(ConfigError::Invalid("corpus.n_configs must be > 0".into()));
        }
        let f = self.corpus.validation_fraction;
        if !(0.0..1.0).contains(&f) || f == 0.0 {
            return Err(ConfigError::Invalid(format!(
                "corpus.validation_fraction {f} not in (0, 1)"
            )));
        }
        if self.evaluate.ground_truth_matches < 2 {
            return Err(ConfigError::Invalid(
                "evaluate.ground_truth_matches must be >= 2".into(),
            ));
        }
        Ok(())
    }

    /// The simulation-relevant sub-config consumed by the corpus builder.
    pub fn build_config(&self) -> BuildConfig {
        BuildConfig {
            generator: self.generator.clone(),
            ranges: self.ranges.clone(),
            match_config: self.match_config.clone(),
        }
    }

    /// Default config rendered as TOML (for a starter file).
    pub fn default_toml() -> String {
        let mut cfg = ExperimentConfig::default();
        cfg.fill_defaults();
        toml::to_string_pretty(&cfg).expect("default config serializes")
    }
}
