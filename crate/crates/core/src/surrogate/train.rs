//! Mini-batch training with adaptive-moment gradient descent, early stopping
//! on validation loss, and the regression metrics.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{backward, forward, ModelKind, Net, SurrogateModel, Trace, MAP_INPUT, OUTPUTS, PARAM_INPUT};
use crate::corpus::Sample;
use crate::rng::stream;

/// Samples within a batch are processed in fixed chunks of this size; chunk
/// results reduce in order, so gradients are bit-identical for any worker
/// count.
const REDUCE_CHUNK: usize = 4;

/// Training hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Early stopping patience in epochs; `None` disables early stopping.
    pub patience: Option<usize>,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub seed: u64,
    /// Optional early exit once the epoch training loss drops below this
    /// value (used by capacity/overfit checks).
    pub stop_below_train_loss: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 100,
            patience: Some(5),
            batch_size: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            seed: 0,
            stop_below_train_loss: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.max_epochs == 0 || self.batch_size == 0 {
            return Err(TrainError::BadConfig(
                "max_epochs and batch_size must be > 0".into(),
            ));
        }
        if let Some(p) = self.patience {
            if p >= self.max_epochs {
                return Err(TrainError::BadConfig(format!(
                    "patience {p} must be < max_epochs {}",
                    self.max_epochs
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training and validation sets must be non-empty")]
    EmptySet,
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("invalid training config: {0}")]
    BadConfig(String),
    #[error("prediction/target lengths differ or are < 2")]
    BadMetricsInput,
}

/// Dense training arrays extracted from corpus samples.
pub struct Dataset {
    pub n: usize,
    maps: Vec<f32>,
    params: Vec<f32>,
    targets: Vec<f32>,
}

impl Dataset {
    pub fn from_samples(samples: &[Sample]) -> Dataset {
        let n = samples.len();
        let mut maps = Vec::with_capacity(n * MAP_INPUT);
        let mut params = Vec::with_capacity(n * PARAM_INPUT);
        let mut targets = Vec::with_capacity(n * OUTPUTS);
        for s in samples {
            maps.extend_from_slice(&s.channels.to_f32());
            params.extend_from_slice(&s.params);
            targets.push(s.score);
            targets.push(s.duration_norm);
        }
        Dataset {
            n,
            maps,
            params,
            targets,
        }
    }

    pub fn map(&self, i: usize) -> &[f32] {
        &self.maps[i * MAP_INPUT..(i + 1) * MAP_INPUT]
    }

    pub fn params(&self, i: usize) -> &[f32] {
        &self.params[i * PARAM_INPUT..(i + 1) * PARAM_INPUT]
    }

    pub fn target(&self, i: usize) -> [f32; OUTPUTS] {
        [self.targets[i * OUTPUTS], self.targets[i * OUTPUTS + 1]]
    }
}

/// One epoch in the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Validation metrics: mean absolute error and R-squared per output.
/// R-squared is `None` when the target variance is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mae_t: f64,
    pub mae_s: f64,
    pub r2_t: Option<f64>,
    pub r2_s: Option<f64>,
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("prediction/target lengths differ or are < 2")]
    BadInput,
}

/// A finished training run.
pub struct TrainOutcome {
    pub model: SurrogateModel,
    pub metrics: Metrics,
    pub log: Vec<EpochRecord>,
    /// Epoch whose weights were restored (lowest validation loss).
    pub best_epoch: usize,
}

/// Squared-error loss summed over the two outputs for one sample.
fn sample_loss(out: [f32; OUTPUTS], target: [f32; OUTPUTS]) -> f64 {
    let ds = f64::from(out[0]) - f64::from(target[0]);
    let dt = f64::from(out[1]) - f64::from(target[1]);
    ds * ds + dt * dt
}

/// Trains a fresh model of the given kind. Deterministic in
/// (kind, datasets, cfg.seed) independent of worker parallelism.
pub fn train(
    kind: ModelKind,
    train_set: &Dataset,
    val_set: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if train_set.n == 0 || val_set.n == 0 {
        return Err(TrainError::EmptySet);
    }
    let mut model = SurrogateModel::init(kind, cfg.seed);
    let mut adam = Adam::new(&model.net, cfg);
    let mut shuffle_rng = stream(crate::rng::derive_seed(cfg.seed, "shuffle", 0));

    let mut order: Vec<usize> = (0..train_set.n).collect();
    let mut log = Vec::new();
    let mut best: Option<(f64, Net<f32>, usize)> = None;
    let mut stale = 0usize;

    for epoch in 1..=cfg.max_epochs {
        // seeded Fisher-Yates shuffle per epoch
        for i in (1..order.len()).rev() {
            let j = shuffle_rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (grad, batch_loss) = batch_gradient(&model.net, train_set, batch);
            loss_sum += batch_loss;
            adam.step(&mut model.net, &grad, cfg);
        }
        let train_loss = loss_sum / train_set.n as f64;
        let val_loss = evaluate_loss(&model.net, val_set);
        log.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(TrainError::Diverged { epoch });
        }
        let improved = best.as_ref().is_none_or(|(b, _, _)| val_loss < *b);
        if improved {
            best = Some((val_loss, model.net.clone(), epoch));
            stale = 0;
        } else {
            stale += 1;
        }
        if let Some(patience) = cfg.patience {
            if stale >= patience {
                break;
            }
        }
        if let Some(threshold) = cfg.stop_below_train_loss {
            if train_loss < threshold {
                break;
            }
        }
    }

    let (_, best_net, best_epoch) = best.expect("at least one epoch ran");
    model.net = best_net;
    let (predictions, targets) = predict_all(&model.net, val_set);
    let metrics = metrics(&predictions, &targets).map_err(|_| TrainError::BadMetricsInput)?;
    Ok(TrainOutcome {
        model,
        metrics,
        log,
        best_epoch,
    })
}

/// Mean batch gradient and summed loss, reduced in fixed chunk order.
fn batch_gradient(net: &Net<f32>, data: &Dataset, batch: &[usize]) -> (Net<f32>, f64) {
    let chunks: Vec<(Net<f32>, f64)> = batch
        .par_chunks(REDUCE_CHUNK)
        .map(|chunk| {
            let mut grad = Net::<f32>::zeros(net.kind());
            let mut tr = Trace::new();
            let mut loss = 0.0;
            for &i in chunk {
                let target = data.target(i);
                let out = forward(net, data.map(i), data.params(i), &mut tr);
                loss += sample_loss(out, target);
                let dout = [2.0 * (out[0] - target[0]), 2.0 * (out[1] - target[1])];
                backward(net, data.map(i), data.params(i), &mut tr, dout, &mut grad);
            }
            (grad, loss)
        })
        .collect();
    let mut total = Net::<f32>::zeros(net.kind());
    let mut loss = 0.0;
    for (g, l) in chunks {
        total.add_assign(&g);
        loss += l;
    }
    total.scale(1.0 / batch.len() as f32);
    (total, loss)
}

/// Mean validation loss, reduced in index order.
pub fn evaluate_loss(net: &Net<f32>, data: &Dataset) -> f64 {
    let losses: Vec<f64> = (0..data.n)
        .collect::<Vec<_>>()
        .par_chunks(64)
        .map(|chunk| {
            let mut tr = Trace::new();
            let mut sum = 0.0;
            for &i in chunk {
                let out = forward(net, data.map(i), data.params(i), &mut tr);
                sum += sample_loss(out, data.target(i));
            }
            sum
        })
        .collect();
    losses.iter().sum::<f64>() / data.n as f64
}

/// Raw predictions and targets over a dataset, index order.
pub fn predict_all(net: &Net<f32>, data: &Dataset) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let predictions: Vec<[f64; 2]> = (0..data.n)
        .collect::<Vec<_>>()
        .par_chunks(64)
        .map(|chunk| {
            let mut tr = Trace::new();
            chunk
                .iter()
                .map(|&i| {
                    let out = forward(net, data.map(i), data.params(i), &mut tr);
                    [f64::from(out[0]), f64::from(out[1])]
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect();
    let targets = (0..data.n)
        .map(|i| {
            let t = data.target(i);
            [f64::from(t[0]), f64::from(t[1])]
        })
        .collect();
    (predictions, targets)
}

/// MAE and R-squared per output. Column 0 is score, column 1 duration.
/// R-squared = 1 - SSE/SST with SST from the target variance; zero target
/// variance flags the value as `None`.
pub fn metrics(predictions: &[[f64; 2]], targets: &[[f64; 2]]) -> Result<Metrics, MetricsError> {
    if predictions.len() != targets.len() || predictions.len() < 2 {
        return Err(MetricsError::BadInput);
    }
    let column = |c: usize| -> (f64, Option<f64>) {
        let n = targets.len() as f64;
        let mean_t = targets.iter().map(|t| t[c]).sum::<f64>() / n;
        let mae = predictions
            .iter()
            .zip(targets)
            .map(|(p, t)| (p[c] - t[c]).abs())
            .sum::<f64>()
            / n;
        let sse: f64 = predictions
            .iter()
            .zip(targets)
            .map(|(p, t)| (p[c] - t[c]) * (p[c] - t[c]))
            .sum();
        let sst: f64 = targets.iter().map(|t| (t[c] - mean_t) * (t[c] - mean_t)).sum();
        let r2 = if sst == 0.0 { None } else { Some(1.0 - sse / sst) };
        (mae, r2)
    };
    let (mae_s, r2_s) = column(0);
    let (mae_t, r2_t) = column(1);
    Ok(Metrics {
        mae_t,
        mae_s,
        r2_t,
        r2_s,
    })
}

/// CSV for the four-column metrics row; undefined R-squared prints NA.
pub fn metrics_csv(m: &Metrics) -> String {
    let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |x| x.to_string());
    format!(
        "mae_t,mae_s,r2_t,r2_s\n{},{},{},{}\n",
        m.mae_t,
        m.mae_s,
        fmt(m.r2_t),
        fmt(m.r2_s)
    )
}

/// CSV of the per-epoch loss log.
pub fn epoch_log_csv(log: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss\n");
    for r in log {
        out.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, r.val_loss));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_corpus, BuildConfig};

    fn small_sets() -> (Dataset, Dataset) {
        let corpus = build_corpus(30, 5, &BuildConfig::default()).unwrap();
        let (train, val) = crate::corpus::split(&corpus, 0.2, 1).unwrap();
        (
            Dataset::from_samples(&train.samples),
            Dataset::from_samples(&val.samples),
        )
    }

    #[test]
    fn perfect_predictions_score_zero_mae_unit_r2() {
        let targets = vec![[0.1, 0.9], [0.4, 0.2], [0.8, 0.5]];
        let m = metrics(&targets, &targets).unwrap();
        assert_eq!(m.mae_s, 0.0);
        assert_eq!(m.mae_t, 0.0);
        assert_eq!(m.r2_s, Some(1.0));
        assert_eq!(m.r2_t, Some(1.0));
    }

    #[test]
    fn constant_mean_predictor_has_zero_r2() {
        let targets = vec![[0.0, 0.2], [1.0, 0.8], [0.5, 0.5], [0.5, 0.5]];
        let n = targets.len() as f64;
        let mean_s = targets.iter().map(|t| t[0]).sum::<f64>() / n;
        let mean_t = targets.iter().map(|t| t[1]).sum::<f64>() / n;
        let preds = vec![[mean_s, mean_t]; targets.len()];
        let m = metrics(&preds, &targets).unwrap();
        assert!(m.r2_s.unwrap().abs() < 1e-12);
        assert!(m.r2_t.unwrap().abs() < 1e-12);
    }

    #[test]
    fn opposite_predictions_hand_example() {
        // targets [0,1], predictions [1,0]: MAE 1, R^2 = 1 - 2/0.5 = -3
        let targets = vec![[0.0, 0.0], [1.0, 1.0]];
        let preds = vec![[1.0, 1.0], [0.0, 0.0]];
        let m = metrics(&preds, &targets).unwrap();
        assert!((m.mae_s - 1.0).abs() < 1e-12);
        assert!((m.mae_t - 1.0).abs() < 1e-12);
        assert!((m.r2_s.unwrap() + 3.0).abs() < 1e-12);
        assert!((m.r2_t.unwrap() + 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_targets_flag_r2() {
        let targets = vec![[0.5, 0.3], [0.5, 0.3]];
        let preds = vec![[0.4, 0.3], [0.6, 0.3]];
        let m = metrics(&preds, &targets).unwrap();
        assert_eq!(m.r2_s, None);
        assert_eq!(m.r2_t, None);
        assert!(metrics_csv(&m).contains("NA"));
    }

    #[test]
    fn metrics_rejects_bad_input() {
        assert!(metrics(&[[0.0, 0.0]], &[[0.0, 0.0]]).is_err());
        assert!(metrics(&[[0.0, 0.0]; 3], &[[0.0, 0.0]; 2]).is_err());
    }

    #[test]
    fn training_runs_and_restores_best_epoch() {
        let (train_set, val_set) = small_sets();
        let cfg = TrainConfig {
            max_epochs: 8,
            patience: Some(3),
            seed: 7,
            ..TrainConfig::default()
        };
        let out = train(ModelKind::Linear, &train_set, &val_set, &cfg).unwrap();
        assert!(!out.log.is_empty());
        // restored epoch has the minimum validation loss in the log
        let best_in_log = out
            .log
            .iter()
            .min_by(|a, b| a.val_loss.total_cmp(&b.val_loss))
            .unwrap();
        assert_eq!(best_in_log.epoch, out.best_epoch);
        let restored_loss = evaluate_loss(&out.model.net, &val_set);
        assert!((restored_loss - best_in_log.val_loss).abs() < 1e-9);
        for r in &out.log {
            assert!(restored_loss <= r.val_loss + 1e-9);
        }
    }

    #[test]
    fn training_is_deterministic_in_seed() {
        let (train_set, val_set) = small_sets();
        let cfg = TrainConfig {
            max_epochs: 4,
            patience: None,
            seed: 3,
            ..TrainConfig::default()
        };
        let a = train(ModelKind::Mlp16, &train_set, &val_set, &cfg).unwrap();
        let b = train(ModelKind::Mlp16, &train_set, &val_set, &cfg).unwrap();
        assert_eq!(a.log, b.log);
        for ((_, ta), (_, tb)) in a.model.net.tensors().iter().zip(b.model.net.tensors()) {
            assert_eq!(*ta, tb, "weights differ");
        }
    }

    #[test]
    fn empty_sets_error() {
        let (train_set, _) = small_sets();
        let empty = Dataset::from_samples(&[]);
        assert!(matches!(
            train(ModelKind::Linear, &empty, &train_set, &TrainConfig::default()),
            Err(TrainError::EmptySet)
        ));
    }

    #[test]
    fn patience_must_stay_below_max_epochs() {
        let cfg = TrainConfig {
            max_epochs: 5,
            patience: Some(5),
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}

/// Adaptive-moment estimation optimizer state.
struct Adam {
    m: Net<f32>,
    v: Net<f32>,
    t: i32,
    epsilon: f32,
}

impl Adam {
    fn new(net: &Net<f32>, _cfg: &TrainConfig) -> Adam {
        Adam {
            m: Net::zeros(net.kind()),
            v: Net::zeros(net.kind()),
            t: 0,
            epsilon: 1e-8,
        }
    }

    fn step(&mut self, net: &mut Net<f32>, grad: &Net<f32>, cfg: &TrainConfig) {
        self.t += 1;
        let b1 = cfg.beta1;
        let b2 = cfg.beta2;
        let bias1 = 1.0 - b1.powi(self.t);
        let bias2 = 1.0 - b2.powi(self.t);
        let lr = cfg.learning_rate;
        for (((_, w), (_, g)), ((_, m), (_, v))) in net
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors())
            .zip(self.m.tensors_mut().into_iter().zip(self.v.tensors_mut()))
        {
            for i in 0..w.len() {
                let gi = g[i];
                m[i] = b1 * m[i] + (1.0 - b1) * gi;
                v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                let mhat = m[i] / bias1;
                let vhat = v[i] / bias2;
                w[i] -= lr * mhat / (vhat.sqrt() + self.epsilon);
            }
        }
    }
}
