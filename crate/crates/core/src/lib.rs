//! Surrogate-assisted balancing of character class pairs for a two-player
//! grid deathmatch shooter.
//!
//! The pipeline has four stages, each usable on its own:
//!
//! 1. [`level`] generates 20x20 two-floor arenas (digger agents plus a
//!    stochastic cellular automaton) and encodes them as 8-channel binary
//!    stacks.
//! 2. [`sim`] plays deterministic 1v1 deathmatches between parameterized
//!    character classes ([`classes`]) and reports score and duration;
//!    [`corpus`] turns batches of simulated matches into a training set.
//! 3. [`surrogate`] trains a two-branch convolutional regressor (and flat
//!    baselines) that predicts match score and normalized duration from a
//!    level image and 16 class parameters.
//! 4. [`evolve`] runs a genetic algorithm against the trained surrogate to
//!    find class pairs matching a designer target, and [`analysis`] validates
//!    the winners against simulation ground truth.
//!
//! Everything is seeded: the same master seed reproduces the same corpus,
//! weights, evolved classes and reports, independent of worker parallelism.

pub mod analysis;
pub mod classes;
pub mod config;
pub mod corpus;
pub mod evolve;
pub mod level;
pub mod pipeline;
pub mod rng;
pub mod sim;
pub mod surrogate;

pub use classes::{CharacterClass, ClassPair, Genotype, ParamRanges, WeaponRange};
pub use config::ExperimentConfig;
pub use corpus::{Corpus, Sample};
pub use evolve::{DesiredOutcome, EvolutionConfig, RunResult, TargetPreset};
pub use level::{ChannelStack, GeneratorConfig, Level, MovementGraph, Tile};
pub use sim::{MatchConfig, MatchOutcome};
pub use surrogate::{Metrics, ModelKind, Prediction, SurrogateModel, TrainConfig};
