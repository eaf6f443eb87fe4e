//! Gameplay-outcome regression models.
//!
//! The main model is a two-branch network: the level branch runs two
//! convolution + max-pool blocks over the 8x20x20 channel stack and flattens
//! to 800 features; the class branch maps the 16 class parameters to 8
//! features through one dense layer. Both branches concatenate into a
//! 128-node decision layer with two outputs: player-1 score and normalized
//! match duration. Every node, including the outputs, is an ELU; consumers
//! clamp predictions to [0, 1].
//!
//! Three flat baselines (best MLP with 16 hidden nodes, a perceptron, and
//! plain linear regression) consume the same samples as a 3216-wide vector.

mod gradcheck;
mod io;
mod layers;
mod train;

pub use gradcheck::{gradient_check, GradCheckReport};
pub use io::{load_model, save_model, ModelIoError};
pub use layers::{elu_backward, elu_in_place, maxpool2_backward, maxpool2_forward, Conv2d, Dense, Real};
pub use train::{
    epoch_log_csv, metrics, metrics_csv, train, Dataset, EpochRecord, Metrics, MetricsError,
    TrainConfig, TrainError, TrainOutcome,
};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::level::{ChannelStack, TILES};
use crate::rng::{fnv1a, stream};

/// Map-branch input: 8 channels of 20x20.
pub const MAP_INPUT: usize = 8 * TILES;
/// Class-branch input: 16 normalized parameters.
pub const PARAM_INPUT: usize = 16;
/// Flat-model input: flattened channels plus parameters.
pub const FLAT_INPUT: usize = MAP_INPUT + PARAM_INPUT;
/// Width of the flattened map features after the second pooling block.
pub const FLATTEN: usize = 32 * 5 * 5;
/// Network output width: (score, normalized duration).
pub const OUTPUTS: usize = 2;

/// Which regression model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Cnn,
    Mlp16,
    Perceptron,
    Linear,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Cnn,
        ModelKind::Mlp16,
        ModelKind::Perceptron,
        ModelKind::Linear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Cnn => "cnn",
            ModelKind::Mlp16 => "mlp16",
            ModelKind::Perceptron => "perceptron",
            ModelKind::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        ModelKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// A model prediction. Raw outputs are kept for metrics; consumers read the
/// clamped copies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Raw predicted score of player 1.
    pub p_s: f64,
    /// Raw predicted normalized duration.
    pub p_t: f64,
}

impl Prediction {
    /// Clamped score for consumers.
    pub fn s_clamped(&self) -> f64 {
        self.p_s.clamp(0.0, 1.0)
    }

    /// Clamped normalized duration for consumers.
    pub fn t_clamped(&self) -> f64 {
        self.p_t.clamp(0.0, 1.0)
    }
}

/// The two-branch convolutional network.
#[derive(Debug, Clone)]
pub struct CnnNet<T> {
    pub conv1: Conv2d<T>,
    pub conv2: Conv2d<T>,
    pub class_fc: Dense<T>,
    pub head_fc: Dense<T>,
    pub out_fc: Dense<T>,
}

/// Flat baseline: optional hidden layer, then the output layer. The output
/// ELU is disabled only for plain linear regression.
#[derive(Debug, Clone)]
pub struct FlatNet<T> {
    pub hidden: Option<Dense<T>>,
    pub out: Dense<T>,
    pub elu_output: bool,
}

#[derive(Debug, Clone)]
pub enum Net<T> {
    Cnn(CnnNet<T>),
    Flat(FlatNet<T>),
}

/// A trained (or training) surrogate model.
#[derive(Debug, Clone)]
pub struct SurrogateModel {
    pub kind: ModelKind,
    pub net: Net<f32>,
}

/// Shape description of a model: named tensors plus the two structural
/// anchors (flatten and output width).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    pub kind: ModelKind,
    pub tensors: Vec<(&'static str, Vec<usize>)>,
    pub flatten_width: usize,
    pub output_width: usize,
}

impl NetworkSpec {
    pub fn of(kind: ModelKind) -> NetworkSpec {
        let tensors = match kind {
            ModelKind::Cnn => vec![
                ("conv1.w", vec![16, 8, 5, 5]),
                ("conv1.b", vec![16]),
                ("conv2.w", vec![32, 16, 5, 5]),
                ("conv2.b", vec![32]),
                ("class_fc.w", vec![8, 16]),
                ("class_fc.b", vec![8]),
                ("head_fc.w", vec![128, 808]),
                ("head_fc.b", vec![128]),
                ("out_fc.w", vec![2, 128]),
                ("out_fc.b", vec![2]),
            ],
            ModelKind::Mlp16 => vec![
                ("hidden.w", vec![16, FLAT_INPUT]),
                ("hidden.b", vec![16]),
                ("out.w", vec![2, 16]),
                ("out.b", vec![2]),
            ],
            ModelKind::Perceptron | ModelKind::Linear => vec![
                ("out.w", vec![2, FLAT_INPUT]),
                ("out.b", vec![2]),
            ],
        };
        NetworkSpec {
            kind,
            tensors,
            flatten_width: FLATTEN,
            output_width: OUTPUTS,
        }
    }

    /// Stable digest of the architecture, stored in weight files.
    pub fn digest(&self) -> u64 {
        let mut text = format!("{};flatten={};out={}", self.kind.name(), self.flatten_width, self.output_width);
        for (name, dims) in &self.tensors {
            text.push_str(&format!(";{name}:{dims:?}"));
        }
        fnv1a(text.as_bytes())
    }
}

impl<T: Real> CnnNet<T> {
    fn zeros() -> CnnNet<T> {
        CnnNet {
            conv1: Conv2d::zeros(8, 16, 20, 5),
            conv2: Conv2d::zeros(16, 32, 10, 5),
            class_fc: Dense::zeros(PARAM_INPUT, 8),
            head_fc: Dense::zeros(FLATTEN + 8, 128),
            out_fc: Dense::zeros(128, OUTPUTS),
        }
    }
}

impl<T: Real> Net<T> {
    pub fn zeros(kind: ModelKind) -> Net<T> {
        match kind {
            ModelKind::Cnn => Net::Cnn(CnnNet::zeros()),
            ModelKind::Mlp16 => Net::Flat(FlatNet {
                hidden: Some(Dense::zeros(FLAT_INPUT, 16)),
                out: Dense::zeros(16, OUTPUTS),
                elu_output: true,
            }),
            ModelKind::Perceptron => Net::Flat(FlatNet {
                hidden: None,
                out: Dense::zeros(FLAT_INPUT, OUTPUTS),
                elu_output: true,
            }),
            ModelKind::Linear => Net::Flat(FlatNet {
                hidden: None,
                out: Dense::zeros(FLAT_INPUT, OUTPUTS),
                elu_output: false,
            }),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Net::Cnn(_) => ModelKind::Cnn,
            Net::Flat(f) => match (&f.hidden, f.elu_output) {
                (Some(_), _) => ModelKind::Mlp16,
                (None, true) => ModelKind::Perceptron,
                (None, false) => ModelKind::Linear,
            },
        }
    }

    /// Tensors in the fixed serialization order, matching
    /// [`NetworkSpec::of`].
    pub fn tensors(&self) -> Vec<(&'static str, &[T])> {
        match self {
            Net::Cnn(n) => vec![
                ("conv1.w", n.conv1.w.as_slice()),
                ("conv1.b", n.conv1.b.as_slice()),
                ("conv2.w", n.conv2.w.as_slice()),
                ("conv2.b", n.conv2.b.as_slice()),
                ("class_fc.w", n.class_fc.w.as_slice()),
                ("class_fc.b", n.class_fc.b.as_slice()),
                ("head_fc.w", n.head_fc.w.as_slice()),
                ("head_fc.b", n.head_fc.b.as_slice()),
                ("out_fc.w", n.out_fc.w.as_slice()),
                ("out_fc.b", n.out_fc.b.as_slice()),
            ],
            Net::Flat(n) => {
                let mut v = Vec::new();
                if let Some(h) = &n.hidden {
                    v.push(("hidden.w", h.w.as_slice()));
                    v.push(("hidden.b", h.b.as_slice()));
                }
                v.push(("out.w", n.out.w.as_slice()));
                v.push(("out.b", n.out.b.as_slice()));
                v
            }
        }
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Vec<T>)> {
        match self {
            Net::Cnn(n) => vec![
                ("conv1.w", &mut n.conv1.w),
                ("conv1.b", &mut n.conv1.b),
                ("conv2.w", &mut n.conv2.w),
                ("conv2.b", &mut n.conv2.b),
                ("class_fc.w", &mut n.class_fc.w),
                ("class_fc.b", &mut n.class_fc.b),
                ("head_fc.w", &mut n.head_fc.w),
                ("head_fc.b", &mut n.head_fc.b),
                ("out_fc.w", &mut n.out_fc.w),
                ("out_fc.b", &mut n.out_fc.b),
            ],
            Net::Flat(n) => {
                let mut v = Vec::new();
                if let Some(h) = &mut n.hidden {
                    v.push(("hidden.w", &mut h.w));
                    v.push(("hidden.b", &mut h.b));
                }
                v.push(("out.w", &mut n.out.w));
                v.push(("out.b", &mut n.out.b));
                v
            }
        }
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Accumulates `other` into `self` element-wise.
    pub fn add_assign(&mut self, other: &Net<T>) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += *y;
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for (_, t) in self.tensors_mut() {
            for x in t.iter_mut() {
                *x = *x * s;
            }
        }
    }

    pub fn to_f64(&self) -> Net<f64>
    where
        T: Real,
    {
        let mut out = Net::<f64>::zeros(self.kind());
        for ((_, dst), (_, src)) in out.tensors_mut().into_iter().zip(self.tensors()) {
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                *d = s.to_f64();
            }
        }
        out
    }
}

/// Per-sample activations and backward scratch. Reused across samples.
pub struct Trace<T> {
    // cnn forward
    conv1_out: Vec<T>,
    pool1_out: Vec<T>,
    pool1_idx: Vec<u32>,
    conv2_out: Vec<T>,
    pool2_out: Vec<T>,
    pool2_idx: Vec<u32>,
    class_out: Vec<T>,
    concat: Vec<T>,
    head_out: Vec<T>,
    out: [T; OUTPUTS],
    // flat forward
    flat_in: Vec<T>,
    hidden_out: Vec<T>,
    // backward scratch
    d_head: Vec<T>,
    d_concat: Vec<T>,
    d_conv2: Vec<T>,
    d_pool1: Vec<T>,
    d_conv1: Vec<T>,
    d_hidden: Vec<T>,
}

impl<T: Real> Trace<T> {
    pub fn new() -> Trace<T> {
        Trace {
            conv1_out: vec![T::ZERO; 16 * 400],
            pool1_out: vec![T::ZERO; 16 * 100],
            pool1_idx: vec![0; 16 * 100],
            conv2_out: vec![T::ZERO; 32 * 100],
            pool2_out: vec![T::ZERO; FLATTEN],
            pool2_idx: vec![0; FLATTEN],
            class_out: vec![T::ZERO; 8],
            concat: vec![T::ZERO; FLATTEN + 8],
            head_out: vec![T::ZERO; 128],
            out: [T::ZERO; OUTPUTS],
            flat_in: vec![T::ZERO; FLAT_INPUT],
            hidden_out: vec![T::ZERO; 16],
            d_head: vec![T::ZERO; 128],
            d_concat: vec![T::ZERO; FLATTEN + 8],
            d_conv2: vec![T::ZERO; 32 * 100],
            d_pool1: vec![T::ZERO; 16 * 100],
            d_conv1: vec![T::ZERO; 16 * 400],
            d_hidden: vec![T::ZERO; 16],
        }
    }

    /// Flattened map features after the second pooling block (the level
    /// branch output of the last forward pass).
    pub fn flatten(&self) -> &[T] {
        &self.pool2_out
    }

    pub fn output(&self) -> [T; OUTPUTS] {
        self.out
    }
}

impl<T: Real> Default for Trace<T> {
    fn default() -> Self {
        Trace::new()
    }
}

/// Forward pass. `map` is the 3200-element channel stack, `params` the 16
/// class parameters. Returns (score, duration) raw outputs.
pub fn forward<T: Real>(net: &Net<T>, map: &[T], params: &[T], tr: &mut Trace<T>) -> [T; OUTPUTS] {
    debug_assert_eq!(map.len(), MAP_INPUT);
    debug_assert_eq!(params.len(), PARAM_INPUT);
    match net {
        Net::Cnn(n) => {
            n.conv1.forward(map, &mut tr.conv1_out);
            elu_in_place(&mut tr.conv1_out);
            maxpool2_forward(&tr.conv1_out, 16, 20, &mut tr.pool1_out, &mut tr.pool1_idx);
            n.conv2.forward(&tr.pool1_out, &mut tr.conv2_out);
            elu_in_place(&mut tr.conv2_out);
            maxpool2_forward(&tr.conv2_out, 32, 10, &mut tr.pool2_out, &mut tr.pool2_idx);
            n.class_fc.forward(params, &mut tr.class_out);
            elu_in_place(&mut tr.class_out);
            tr.concat[..FLATTEN].copy_from_slice(&tr.pool2_out);
            tr.concat[FLATTEN..].copy_from_slice(&tr.class_out);
            n.head_fc.forward(&tr.concat, &mut tr.head_out);
            elu_in_place(&mut tr.head_out);
            let mut out = [T::ZERO; OUTPUTS];
            n.out_fc.forward(&tr.head_out, &mut out);
            elu_in_place(&mut out);
            tr.out = out;
            out
        }
        Net::Flat(n) => {
            tr.flat_in[..MAP_INPUT].copy_from_slice(map);
            tr.flat_in[MAP_INPUT..].copy_from_slice(params);
            let mut out = [T::ZERO; OUTPUTS];
            if let Some(h) = &n.hidden {
                h.forward(&tr.flat_in, &mut tr.hidden_out);
                elu_in_place(&mut tr.hidden_out);
                n.out.forward(&tr.hidden_out, &mut out);
            } else {
                n.out.forward(&tr.flat_in, &mut out);
            }
            if n.elu_output {
                elu_in_place(&mut out);
            }
            tr.out = out;
            out
        }
    }
}

/// Backward pass of the squared-error loss for the sample last run through
/// [`forward`] with this trace. Accumulates parameter gradients into `grad`.
/// `dout` is dL/d(output), before the output activation.
pub fn backward<T: Real>(
    net: &Net<T>,
    map: &[T],
    params: &[T],
    tr: &mut Trace<T>,
    mut dout: [T; OUTPUTS],
    grad: &mut Net<T>,
) {
    match (net, grad) {
        (Net::Cnn(n), Net::Cnn(g)) => {
            elu_backward(&tr.out, &mut dout);
            n.out_fc
                .backward(&tr.head_out, &dout, &mut g.out_fc, Some(&mut tr.d_head));
            elu_backward(&tr.head_out, &mut tr.d_head);
            n.head_fc
                .backward(&tr.concat, &tr.d_head, &mut g.head_fc, Some(&mut tr.d_concat));
            // class branch
            let d_class = tr.d_concat[FLATTEN..].to_vec();
            let mut d_class = d_class;
            elu_backward(&tr.class_out, &mut d_class);
            n.class_fc.backward(params, &d_class, &mut g.class_fc, None);
            // map branch
            maxpool2_backward(&tr.d_concat[..FLATTEN], &tr.pool2_idx, 32, 10, &mut tr.d_conv2);
            elu_backward(&tr.conv2_out, &mut tr.d_conv2);
            n.conv2
                .backward(&tr.pool1_out, &tr.d_conv2, &mut g.conv2, Some(&mut tr.d_pool1));
            maxpool2_backward(&tr.d_pool1, &tr.pool1_idx, 16, 20, &mut tr.d_conv1);
            elu_backward(&tr.conv1_out, &mut tr.d_conv1);
            n.conv1.backward(map, &tr.d_conv1, &mut g.conv1, None);
        }
        (Net::Flat(n), Net::Flat(g)) => {
            if n.elu_output {
                elu_backward(&tr.out, &mut dout);
            }
            match (&n.hidden, &mut g.hidden) {
                (Some(h), Some(gh)) => {
                    n.out
                        .backward(&tr.hidden_out, &dout, &mut g.out, Some(&mut tr.d_hidden));
                    elu_backward(&tr.hidden_out, &mut tr.d_hidden);
                    h.backward(&tr.flat_in, &tr.d_hidden, gh, None);
                }
                _ => {
                    n.out.backward(&tr.flat_in, &dout, &mut g.out, None);
                }
            }
        }
        _ => panic!("gradient container does not match the network"),
    }
}

/// Precomputed level features for repeated predictions on one level.
#[derive(Debug, Clone)]
pub enum LevelCtx {
    /// Flattened 800 map features (post conv blocks).
    Cnn(Vec<f32>),
    /// Per-unit partial sums of the map portion of the first layer.
    Flat(Vec<f32>),
}

impl SurrogateModel {
    /// Fresh model: fan-in-scaled gaussian weights on hidden layers, a
    /// near-zero output layer (so raw predictions start near 0 and ELUs
    /// start well inside their linear region), zero biases.
    pub fn init(kind: ModelKind, seed: u64) -> SurrogateModel {
        let mut net = Net::<f32>::zeros(kind);
        let mut rng = stream(seed);
        match &mut net {
            Net::Cnn(n) => {
                init_conv(&mut n.conv1, &mut rng);
                init_conv(&mut n.conv2, &mut rng);
                init_dense(&mut n.class_fc, &mut rng, None);
                init_dense(&mut n.head_fc, &mut rng, None);
                init_dense(&mut n.out_fc, &mut rng, Some(OUT_INIT_STD));
            }
            Net::Flat(n) => {
                if let Some(h) = &mut n.hidden {
                    init_dense(h, &mut rng, None);
                }
                init_dense(&mut n.out, &mut rng, Some(OUT_INIT_STD));
            }
        }
        SurrogateModel { kind, net }
    }

    pub fn spec(&self) -> NetworkSpec {
        NetworkSpec::of(self.kind)
    }

    /// Full prediction from a channel stack and parameter vector.
    pub fn predict(&self, channels: &ChannelStack, params: &[f32; PARAM_INPUT]) -> Prediction {
        let map = channels.to_f32();
        let mut tr = Trace::new();
        let out = forward(&self.net, &map, params, &mut tr);
        Prediction {
            p_s: f64::from(out[0]),
            p_t: f64::from(out[1]),
        }
    }

    /// Precomputes the level-dependent part of the forward pass. Evolution
    /// re-evaluates thousands of genotypes on one fixed level; this skips
    /// the convolutions (CNN) or the 3200-wide dot products (flat models)
    /// for every call after the first.
    pub fn level_context(&self, channels: &ChannelStack) -> LevelCtx {
        let map = channels.to_f32();
        match &self.net {
            Net::Cnn(_) => {
                let mut tr = Trace::new();
                // run only the map branch: forward computes everything, so
                // reuse it with zero params and keep the flatten output
                let params = [0.0f32; PARAM_INPUT];
                forward(&self.net, &map, &params, &mut tr);
                LevelCtx::Cnn(tr.pool2_out.clone())
            }
            Net::Flat(n) => {
                let first = n.hidden.as_ref().unwrap_or(&n.out);
                let mut partial = vec![0.0f32; first.output];
                for (o, p) in partial.iter_mut().enumerate() {
                    let row = &first.w[o * first.input..o * first.input + MAP_INPUT];
                    let mut acc = 0.0f32;
                    for (w, x) in row.iter().zip(map.iter()) {
                        acc += *w * *x;
                    }
                    *p = acc;
                }
                LevelCtx::Flat(partial)
            }
        }
    }

    /// Prediction reusing a [`LevelCtx`] from [`SurrogateModel::level_context`].
    pub fn predict_with(&self, ctx: &LevelCtx, params: &[f32; PARAM_INPUT]) -> Prediction {
        let out = match (&self.net, ctx) {
            (Net::Cnn(n), LevelCtx::Cnn(flat)) => {
                let mut class_out = vec![0.0f32; 8];
                n.class_fc.forward(params, &mut class_out);
                elu_in_place(&mut class_out);
                let mut concat = vec![0.0f32; FLATTEN + 8];
                concat[..FLATTEN].copy_from_slice(flat);
                concat[FLATTEN..].copy_from_slice(&class_out);
                let mut head = vec![0.0f32; 128];
                n.head_fc.forward(&concat, &mut head);
                elu_in_place(&mut head);
                let mut out = [0.0f32; OUTPUTS];
                n.out_fc.forward(&head, &mut out);
                elu_in_place(&mut out);
                out
            }
            (Net::Flat(n), LevelCtx::Flat(partial)) => {
                let first = n.hidden.as_ref().unwrap_or(&n.out);
                let mut first_out = vec![0.0f32; first.output];
                for (o, y) in first_out.iter_mut().enumerate() {
                    let row =
                        &first.w[o * first.input + MAP_INPUT..o * first.input + first.input];
                    let mut acc = partial[o] + first.b[o];
                    for (w, x) in row.iter().zip(params.iter()) {
                        acc += *w * *x;
                    }
                    *y = acc;
                }
                match &n.hidden {
                    Some(_) => {
                        elu_in_place(&mut first_out);
                        let mut out = [0.0f32; OUTPUTS];
                        n.out.forward(&first_out, &mut out);
                        if n.elu_output {
                            elu_in_place(&mut out);
                        }
                        out
                    }
                    None => {
                        let mut out = [first_out[0], first_out[1]];
                        if n.elu_output {
                            elu_in_place(&mut out);
                        }
                        out
                    }
                }
            }
            _ => panic!("level context does not match the model kind"),
        };
        Prediction {
            p_s: f64::from(out[0]),
            p_t: f64::from(out[1]),
        }
    }
}

/// Output-layer weight scale; keeps initial predictions near zero.
const OUT_INIT_STD: f64 = 0.01;

fn init_dense(layer: &mut Dense<f32>, rng: &mut crate::rng::Stream, std: Option<f64>) {
    let std = std.unwrap_or_else(|| (1.0 / layer.input as f64).sqrt());
    for w in layer.w.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *w = (z * std) as f32;
    }
    // biases stay zero
}

fn init_conv(layer: &mut Conv2d<f32>, rng: &mut crate::rng::Stream) {
    let fan_in = layer.in_ch * layer.k * layer.k;
    let std = (1.0 / fan_in as f64).sqrt();
    for w in layer.w.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *w = (z * std) as f32;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::{generate_level, GeneratorConfig};

    #[test]
    fn spec_anchors_flatten_800_and_output_2() {
        for kind in ModelKind::ALL {
            let spec = NetworkSpec::of(kind);
            assert_eq!(spec.flatten_width, 800);
            assert_eq!(spec.output_width, 2);
        }
    }

    #[test]
    fn forward_produces_flatten_width_800() {
        let model = SurrogateModel::init(ModelKind::Cnn, 3);
        let level = generate_level(5, &GeneratorConfig::default()).unwrap();
        let map = level.encode().to_f32();
        let params = [0.3f32; PARAM_INPUT];
        let mut tr = Trace::new();
        let out = forward(&model.net, &map, &params, &mut tr);
        assert_eq!(tr.flatten().len(), 800);
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn zero_weights_give_zero_outputs() {
        // ELU(0) = 0 through every layer
        let net = Net::<f32>::zeros(ModelKind::Cnn);
        let level = generate_level(1, &GeneratorConfig::default()).unwrap();
        let map = level.encode().to_f32();
        let params = [0.7f32; PARAM_INPUT];
        let mut tr = Trace::new();
        let out = forward(&net, &map, &params, &mut tr);
        assert_eq!(out, [0.0, 0.0]);
    }

    #[test]
    fn hand_set_output_layer_matches_affine_value() {
        // zero conv/class/head weights make the 128 head outputs all zero;
        // the final dense layer then returns exactly its biases, and with a
        // hand-set weight on a head unit we can trace one affine path.
        let mut model = SurrogateModel {
            kind: ModelKind::Cnn,
            net: Net::zeros(ModelKind::Cnn),
        };
        if let Net::Cnn(n) = &mut model.net {
            n.out_fc.b = vec![0.25, -0.125];
        }
        let level = generate_level(2, &GeneratorConfig::default()).unwrap();
        let prediction = model.predict(&level.encode(), &[0.5; PARAM_INPUT]);
        assert!((prediction.p_s - 0.25).abs() < 1e-7);
        // ELU(-0.125) = exp(-0.125) - 1
        let expected_t = f64::exp(-0.125) - 1.0;
        assert!((prediction.p_t - expected_t).abs() < 1e-7);
    }

    #[test]
    fn level_context_predictions_match_full_forward() {
        let level = generate_level(9, &GeneratorConfig::default()).unwrap();
        let channels = level.encode();
        for kind in ModelKind::ALL {
            let model = SurrogateModel::init(kind, 11);
            let ctx = model.level_context(&channels);
            for p in [[0.1f32; 16], [0.9f32; 16]] {
                let full = model.predict(&channels, &p);
                let fast = model.predict_with(&ctx, &p);
                assert!(
                    (full.p_s - fast.p_s).abs() < 1e-5 && (full.p_t - fast.p_t).abs() < 1e-5,
                    "{kind:?}: {full:?} vs {fast:?}"
                );
            }
        }
    }

    #[test]
    fn linear_model_is_affine() {
        let model = SurrogateModel::init(ModelKind::Linear, 4);
        let level = generate_level(3, &GeneratorConfig::default()).unwrap();
        let channels = level.encode();
        let zero = model.predict(&channels, &[0.0; 16]);
        let x = model.predict(&channels, &[0.4; 16]);
        let x2 = model.predict(&channels, &[0.8; 16]);
        // f(2x) - f(0) = 2 (f(x) - f(0)) for the params portion
        assert!(((x2.p_s - zero.p_s) - 2.0 * (x.p_s - zero.p_s)).abs() < 1e-4);
        assert!(((x2.p_t - zero.p_t) - 2.0 * (x.p_t - zero.p_t)).abs() < 1e-4);
    }

    #[test]
    fn all_kinds_accept_the_same_inputs() {
        let level = generate_level(8, &GeneratorConfig::default()).unwrap();
        let channels = level.encode();
        let params = [0.25f32; 16];
        for kind in ModelKind::ALL {
            let model = SurrogateModel::init(kind, 1);
            let p = model.predict(&channels, &params);
            assert!(p.p_s.is_finite() && p.p_t.is_finite(), "{kind:?}");
        }
    }

    #[test]
    fn clamped_predictions_stay_in_unit_interval() {
        let p = Prediction { p_s: -0.4, p_t: 1.7 };
        assert_eq!(p.s_clamped(), 0.0);
        assert_eq!(p.t_clamped(), 1.0);
    }
}
