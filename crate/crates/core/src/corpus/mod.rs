//! Training corpus: batches of simulated matches mapped to
//! (level channels, class parameters) -> (score, normalized duration).
//!
//! Each configuration generates one level and one class pair and simulates
//! two matches, the second with the player roles swapped. Matches that hit
//! the time limit are dropped (and counted). Durations are min-max
//! normalized from the 150..600 second band and clamped into [0, 1].

mod io;

pub use io::{load_corpus, save_corpus, CorpusIoError};

use rayon::prelude::*;
use thiserror::Error;

use crate::classes::{denormalize, encode_genotype, random_class, ClassPair, ParamRanges};
use crate::level::{encode_level, generate_level, ChannelStack, GeneratorConfig, LevelError};
use crate::rng::{derive_seed, stream};
use crate::sim::{simulate_match, MatchConfig, SimError};

/// Lower and upper anchors of duration normalization, in seconds.
pub const DURATION_MIN_S: f64 = 150.0;
pub const DURATION_MAX_S: f64 = 600.0;

/// Maps a raw duration to the normalized [0, 1] target.
pub fn normalize_duration(duration_s: f64) -> f64 {
    ((duration_s - DURATION_MIN_S) / (DURATION_MAX_S - DURATION_MIN_S)).clamp(0.0, 1.0)
}

/// One training record.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub channels: ChannelStack,
    /// 16 normalized class parameters, player 1 then player 2, range genes
    /// embedded as 0 / 0.5 / 1.
    pub params: [f32; 16],
    pub score: f32,
    pub duration_norm: f32,
    pub level_seed: u64,
    pub class_seed: u64,
    pub sim_seed: u64,
}

/// An ordered collection of samples plus build provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub samples: Vec<Sample>,
    /// Incomplete matches dropped during the build.
    pub dropped_incomplete: u64,
    /// Digest of the generator / ranges / match configuration.
    pub config_digest: u64,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("config {index}: {source}")]
    Generation {
        index: u64,
        #[source]
        source: LevelError,
    },
    #[error("config {index}: {source}")]
    Simulation {
        index: u64,
        #[source]
        source: SimError,
    },
    #[error("corpus is empty")]
    Empty,
    #[error("split fraction {0} not in (0, 1)")]
    BadFraction(f64),
}

/// Everything the corpus build needs besides the seed.
#[derive(Debug, Clone, Default)]
pub struct BuildConfig {
    pub generator: GeneratorConfig,
    pub ranges: ParamRanges,
    pub match_config: MatchConfig,
}

impl BuildConfig {
    /// Digest over the canonical serialized form, stored in the corpus
    /// header for provenance.
    pub fn digest(&self) -> u64 {
        #[derive(serde::Serialize)]
        struct Canonical<'a> {
            generator: &'a GeneratorConfig,
            ranges: &'a ParamRanges,
            match_config: &'a MatchConfig,
        }
        let text = toml::to_string(&Canonical {
            generator: &self.generator,
            ranges: &self.ranges,
            match_config: &self.match_config,
        })
        .expect("config serializes");
        crate::rng::fnv1a(text.as_bytes())
    }
}

/// Builds a corpus of up to `2 * n_configs` samples. Configurations run in
/// parallel; results merge in configuration order, so the output is
/// deterministic in `master_seed` regardless of worker count.
pub fn build_corpus(
    n_configs: u64,
    master_seed: u64,
    cfg: &BuildConfig,
) -> Result<Corpus, CorpusError> {
    let results: Vec<Result<(Vec<Sample>, u64), CorpusError>> = (0..n_configs)
        .into_par_iter()
        .map(|i| build_config(i, master_seed, cfg))
        .collect();
    let mut samples = Vec::with_capacity(2 * n_configs as usize);
    let mut dropped = 0;
    for r in results {
        let (mut s, d) = r?;
        samples.append(&mut s);
        dropped += d;
    }
    Ok(Corpus {
        samples,
        dropped_incomplete: dropped,
        config_digest: cfg.digest(),
    })
}

/// One configuration: a fresh level feeds two role-swapped matches.
fn build_config(
    index: u64,
    master_seed: u64,
    cfg: &BuildConfig,
) -> Result<(Vec<Sample>, u64), CorpusError> {
    let level_seed = derive_seed(master_seed, "level", index);
    let class_seed = derive_seed(master_seed, "classes", index);
    let level = generate_level(level_seed, &cfg.generator)
        .map_err(|source| CorpusError::Generation { index, source })?;
    let channels = encode_level(&level);
    let mut class_rng = stream(class_seed);
    let pair = ClassPair {
        player1: random_class(&mut class_rng),
        player2: random_class(&mut class_rng),
    };

    let mut samples = Vec::with_capacity(2);
    let mut dropped = 0;
    for (m, pair) in [(0u64, pair), (1u64, pair.swapped())] {
        let sim_seed = derive_seed(master_seed, "sim", 2 * index + m);
        let p1 = denormalize(&pair.player1, &cfg.ranges);
        let p2 = denormalize(&pair.player2, &cfg.ranges);
        let outcome = simulate_match(&level, &p1, &p2, sim_seed, &cfg.match_config)
            .map_err(|source| CorpusError::Simulation { index, source })?;
        if !outcome.completed {
            dropped += 1;
            continue;
        }
        let genotype = encode_genotype(&pair);
        samples.push(Sample {
            channels: channels.clone(),
            params: genotype.to_f32(),
            score: outcome.score as f32,
            duration_norm: normalize_duration(outcome.duration_s) as f32,
            level_seed,
            class_seed,
            sim_seed,
        });
    }
    Ok((samples, dropped))
}

/// Seeded shuffle split into (train, validation). Validation holds
/// `round(fraction * n)` samples; the split is disjoint and exhaustive.
pub fn split(corpus: &Corpus, fraction: f64, seed: u64) -> Result<(Corpus, Corpus), CorpusError> {
    if !(0.0..1.0).contains(&fraction) || fraction == 0.0 {
        return Err(CorpusError::BadFraction(fraction));
    }
    let n = corpus.samples.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = stream(seed);
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = rand::Rng::random_range(&mut rng, 0..=i);
        order.swap(i, j);
    }
    let val_size = (fraction * n as f64).round() as usize;
    let pick = |ids: &[usize]| Corpus {
        samples: ids.iter().map(|&i| corpus.samples[i].clone()).collect(),
        dropped_incomplete: corpus.dropped_incomplete,
        config_digest: corpus.config_digest,
    };
    let (val_ids, train_ids) = order.split_at(val_size);
    Ok((pick(train_ids), pick(val_ids)))
}

/// Number of histogram bins in the distribution report.
pub const REPORT_BINS: usize = 20;

/// Histograms of the gameplay outcomes in a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionReport {
    pub score_hist: [u64; REPORT_BINS],
    pub duration_hist: [u64; REPORT_BINS],
    /// Mean of the raw duration in seconds, reconstructed from the
    /// normalized values (exact for durations inside the 150..600 band).
    pub duration_mean_s: f64,
    /// Population standard deviation of the reconstructed raw duration.
    pub duration_std_s: f64,
    pub samples: u64,
    pub dropped_incomplete: u64,
}

impl DistributionReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,score_count,duration_count\n");
        for b in 0..REPORT_BINS {
            let lo = b as f64 / REPORT_BINS as f64;
            let hi = (b + 1) as f64 / REPORT_BINS as f64;
            out.push_str(&format!(
                "{lo:.2},{hi:.2},{},{}\n",
                self.score_hist[b], self.duration_hist[b]
            ));
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "samples={} dropped_incomplete={} duration_mean_s={:.1} duration_std_s={:.1}",
            self.samples, self.dropped_incomplete, self.duration_mean_s, self.duration_std_s
        )
    }
}

fn bin(v: f64) -> usize {
    ((v * REPORT_BINS as f64) as usize).min(REPORT_BINS - 1)
}

/// Fixed-bin histograms over score and normalized duration plus raw duration
/// moments.
pub fn distribution_report(corpus: &Corpus) -> Result<DistributionReport, CorpusError> {
    if corpus.samples.is_empty() {
        return Err(CorpusError::Empty);
    }
    let mut score_hist = [0u64; REPORT_BINS];
    let mut duration_hist = [0u64; REPORT_BINS];
    let mut durations = Vec::with_capacity(corpus.samples.len());
    for s in &corpus.samples {
        score_hist[bin(f64::from(s.score))] += 1;
        duration_hist[bin(f64::from(s.duration_norm))] += 1;
        durations
            .push(DURATION_MIN_S + f64::from(s.duration_norm) * (DURATION_MAX_S - DURATION_MIN_S));
    }
    let n = durations.len() as f64;
    let mean = durations.iter().sum::<f64>() / n;
    let var = durations.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    Ok(DistributionReport {
        score_hist,
        duration_hist,
        duration_mean_s: mean,
        duration_std_s: var.sqrt(),
        samples: corpus.samples.len() as u64,
        dropped_incomplete: corpus.dropped_incomplete,
    })
}

/// Line-delimited text export for inspection. Channels are hex-encoded
/// bit planes.
pub fn export_text(corpus: &Corpus) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# samples={} dropped_incomplete={} config_digest={:016x}\n",
        corpus.samples.len(),
        corpus.dropped_incomplete,
        corpus.config_digest
    ));
    for s in &corpus.samples {
        let params = s
            .params
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let mut hex = String::with_capacity(800);
        for c in 0..8 {
            for byte in s.channels.plane(c) {
                hex.push_str(&format!("{byte:02x}"));
            }
        }
        out.push_str(&format!(
            "level_seed={} class_seed={} sim_seed={} score={} duration_norm={} params=[{}] channels={}\n",
            s.level_seed, s.class_seed, s.sim_seed, s.score, s.duration_norm, params, hex
        ));
    }
    out
}
