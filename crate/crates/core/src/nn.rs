//! One-hidden-layer feedforward network trained by pattern-mode
//! backpropagation with momentum.
//!
//! Weights are stored row-major: `w1[j * inputs + i]` connects input `i` to
//! hidden node `j`, `w2[k * hidden + j]` connects hidden `j` to output `k`.
//! Node thresholds are carried as biases (`b = -θ`).

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("expected a vector of length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("backpropagation needs sigmoid activations on every layer")]
    NotDifferentiable,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("finite-difference step must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("invalid model file: {0}")]
    InvalidModel(String),
    #[error("model file I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    /// Hard limiter: 1 when the net input reaches `theta`, else 0.
    Threshold { theta: f64 },
}

pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

pub fn activate(v: f64, kind: Activation) -> f64 {
    match kind {
        Activation::Sigmoid => sigmoid(v),
        Activation::Threshold { theta } => {
            if v >= theta {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Metadata recorded by [`train`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub final_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub training: Option<TrainingMeta>,
}

/// Gradients of E = ½ Σ (y − t)² for every parameter, laid out like [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Mlp {
    /// All-zero sigmoid network.
    pub fn zeros(inputs: usize, hidden: usize, outputs: usize) -> Self {
        Self {
            inputs,
            hidden,
            outputs,
            w1: vec![0.0; hidden * inputs],
            b1: vec![0.0; hidden],
            w2: vec![0.0; outputs * hidden],
            b2: vec![0.0; outputs],
            hidden_activation: Activation::Sigmoid,
            output_activation: Activation::Sigmoid,
            training: None,
        }
    }

    /// Sigmoid network with every parameter uniform in `[-range, range)`,
    /// drawn in the order w1, b1, w2, b2.
    pub fn random(inputs: usize, hidden: usize, outputs: usize, range: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-range..range)).collect() };
        let w1 = draw(hidden * inputs);
        let b1 = draw(hidden);
        let w2 = draw(outputs * hidden);
        let b2 = draw(outputs);
        Self { w1, b1, w2, b2, ..Self::zeros(inputs, hidden, outputs) }
    }

    pub fn layer_sizes(&self) -> [usize; 3] {
        [self.inputs, self.hidden, self.outputs]
    }

    pub fn parameter_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    fn check_input(&self, x: &[f64]) -> Result<(), NnError> {
        if x.len() != self.inputs {
            return Err(NnError::DimensionMismatch { expected: self.inputs, found: x.len() });
        }
        Ok(())
    }

    fn forward_unchecked(&self, x: &[f64], hidden: &mut [f64], out: &mut [f64]) {
        for (j, h) in hidden.iter_mut().enumerate() {
            let row = &self.w1[j * self.inputs..(j + 1) * self.inputs];
            let v: f64 = row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.b1[j];
            *h = activate(v, self.hidden_activation);
        }
        for (k, y) in out.iter_mut().enumerate() {
            let row = &self.w2[k * self.hidden..(k + 1) * self.hidden];
            let v: f64 = row.iter().zip(hidden.iter()).map(|(w, h)| w * h).sum::<f64>() + self.b2[k];
            *y = activate(v, self.output_activation);
        }
    }

    /// Output activations for input `x`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        self.check_input(x)?;
        let mut hidden = vec![0.0; self.hidden];
        let mut out = vec![0.0; self.outputs];
        self.forward_unchecked(x, &mut hidden, &mut out);
        Ok(out)
    }

    /// Thresholded outputs: 1 where the activation reaches `threshold`.
    pub fn predict_binary(&self, x: &[f64], threshold: f64) -> Result<Vec<u8>, NnError> {
        Ok(self.forward(x)?.into_iter().map(|y| u8::from(y >= threshold)).collect())
    }

    fn is_sigmoid(&self) -> bool {
        self.hidden_activation == Activation::Sigmoid && self.output_activation == Activation::Sigmoid
    }

    /// Backpropagated gradients of ½ Σ (y − t)² for one sample.
    pub fn gradients(&self, x: &[f64], target: &[f64]) -> Result<Gradients, NnError> {
        self.check_input(x)?;
        if target.len() != self.outputs {
            return Err(NnError::DimensionMismatch { expected: self.outputs, found: target.len() });
        }
        if !self.is_sigmoid() {
            return Err(NnError::NotDifferentiable);
        }
        let mut scratch = Scratch::new(self);
        self.backprop(x, target, &mut scratch);
        let mut g = Gradients {
            w1: vec![0.0; self.w1.len()],
            b1: scratch.delta_hidden.clone(),
            w2: vec![0.0; self.w2.len()],
            b2: scratch.delta_out.clone(),
        };
        for j in 0..self.hidden {
            for i in 0..self.inputs {
                g.w1[j * self.inputs + i] = scratch.delta_hidden[j] * x[i];
            }
        }
        for k in 0..self.outputs {
            for j in 0..self.hidden {
                g.w2[k * self.hidden + j] = scratch.delta_out[k] * scratch.hidden[j];
            }
        }
        Ok(g)
    }

    /// Forward pass plus error signals; returns Σ (y − t)².
    fn backprop(&self, x: &[f64], target: &[f64], s: &mut Scratch) -> f64 {
        self.forward_unchecked(x, &mut s.hidden, &mut s.out);
        let mut sq = 0.0;
        for k in 0..self.outputs {
            let y = s.out[k];
            let e = y - target[k];
            sq += e * e;
            s.delta_out[k] = e * y * (1.0 - y);
        }
        for j in 0..self.hidden {
            let back: f64 = (0..self.outputs).map(|k| s.delta_out[k] * self.w2[k * self.hidden + j]).sum();
            let h = s.hidden[j];
            s.delta_hidden[j] = back * h * (1.0 - h);
        }
        sq
    }

    /// ½ Σ (y − t)² for one sample.
    pub fn loss(&self, x: &[f64], target: &[f64]) -> Result<f64, NnError> {
        let y = self.forward(x)?;
        Ok(0.5 * y.iter().zip(target).map(|(y, t)| (y - t) * (y - t)).sum::<f64>())
    }
}

struct Scratch {
    hidden: Vec<f64>,
    out: Vec<f64>,
    delta_out: Vec<f64>,
    delta_hidden: Vec<f64>,
}

impl Scratch {
    fn new(m: &Mlp) -> Self {
        Self {
            hidden: vec![0.0; m.hidden],
            out: vec![0.0; m.outputs],
            delta_out: vec![0.0; m.outputs],
            delta_hidden: vec![0.0; m.hidden],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub hidden_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Initial weights are uniform in `[-init_range, init_range)`.
    pub init_range: f64,
    pub threshold: f64,
    /// Reshuffle the presentation order every epoch with the seeded
    /// generator. Off by default: patterns are presented in dataset order.
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            momentum: 0.7,
            hidden_size: 5,
            epochs: 1000,
            seed: 0,
            init_range: 0.5,
            threshold: 0.5,
            shuffle: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |msg: &str| Err(NnError::InvalidConfig(msg.to_string()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must be in [0, 1)");
        }
        if self.hidden_size < 1 {
            return bad("hidden_size must be >= 1");
        }
        if !(self.init_range > 0.0) {
            return bad("init_range must be > 0");
        }
        Ok(())
    }
}

/// Per-epoch mean squared error, averaged over patterns and output nodes
/// as the patterns are presented.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub mse_history: Vec<f64>,
}

impl TrainReport {
    pub fn initial_mse(&self) -> Option<f64> {
        self.mse_history.first().copied()
    }

    pub fn final_mse(&self) -> Option<f64> {
        self.mse_history.last().copied()
    }

    /// `epoch,mse` lines for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,mse\n");
        for (i, mse) in self.mse_history.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, mse));
        }
        out
    }
}

pub type Sample = (Vec<f64>, Vec<f64>);

/// Fresh network sized for `dataset`, then [`train`].
pub fn fit(dataset: &[Sample], cfg: &TrainConfig) -> Result<(Mlp, TrainReport), NnError> {
    cfg.validate()?;
    let (x, t) = dataset.first().ok_or(NnError::EmptyDataset)?;
    let model = Mlp::random(x.len(), cfg.hidden_size, t.len(), cfg.init_range, cfg.seed);
    train(model, dataset, cfg)
}

/// Pattern-mode backpropagation: the weights move after every sample with
/// `Δw ← −lr · ∂E/∂w + momentum · Δw`.
pub fn train(mut model: Mlp, dataset: &[Sample], cfg: &TrainConfig) -> Result<(Mlp, TrainReport), NnError> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    if !model.is_sigmoid() {
        return Err(NnError::NotDifferentiable);
    }
    for (x, t) in dataset {
        model.check_input(x)?;
        if t.len() != model.outputs {
            return Err(NnError::DimensionMismatch { expected: model.outputs, found: t.len() });
        }
    }

    let (lr, mu) = (cfg.learning_rate, cfg.momentum);
    let (n_in, n_hid, n_out) = (model.inputs, model.hidden, model.outputs);
    let mut dw1 = vec![0.0; model.w1.len()];
    let mut db1 = vec![0.0; model.b1.len()];
    let mut dw2 = vec![0.0; model.w2.len()];
    let mut db2 = vec![0.0; model.b2.len()];
    let mut s = Scratch::new(&model);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    // Separate stream from initialization so shuffling never perturbs it.
    let mut shuffler = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5348_5546_464c_4531);
    let mut report = TrainReport { mse_history: Vec::with_capacity(cfg.epochs) };

    for epoch in 1..=cfg.epochs {
        if cfg.shuffle {
            use rand::seq::SliceRandom;
            order.shuffle(&mut shuffler);
        }
        let mut sq_sum = 0.0;
        for &n in &order {
            let (x, t) = &dataset[n];
            sq_sum += model.backprop(x, t, &mut s);

            for k in 0..n_out {
                let d = s.delta_out[k];
                let row = k * n_hid;
                for j in 0..n_hid {
                    let step = -lr * d * s.hidden[j] + mu * dw2[row + j];
                    dw2[row + j] = step;
                    model.w2[row + j] += step;
                }
                db2[k] = -lr * d + mu * db2[k];
                model.b2[k] += db2[k];
            }
            for j in 0..n_hid {
                let d = s.delta_hidden[j];
                let row = j * n_in;
                for i in 0..n_in {
                    let step = -lr * d * x[i] + mu * dw1[row + i];
                    dw1[row + i] = step;
                    model.w1[row + i] += step;
                }
                db1[j] = -lr * d + mu * db1[j];
                model.b1[j] += db1[j];
            }
        }
        let mse = sq_sum / (dataset.len() * n_out) as f64;
        if !mse.is_finite() {
            return Err(NnError::NonFiniteLoss { epoch });
        }
        report.mse_history.push(mse);
    }

    model.training = Some(TrainingMeta {
        seed: cfg.seed,
        epochs: cfg.epochs,
        learning_rate: lr,
        momentum: mu,
        final_mse: report.final_mse().unwrap_or(f64::NAN),
    });
    Ok((model, report))
}

/// Largest relative disagreement between backpropagated gradients and
/// central finite differences of ½ Σ (y − t)², over every parameter:
/// `|a − n| / max(|a| + |n|, 1e-12)`.
pub fn gradient_check(model: &Mlp, x: &[f64], target: &[f64], eps: f64) -> Result<f64, NnError> {
    if !(eps > 0.0) {
        return Err(NnError::InvalidEpsilon(eps));
    }
    let analytic = model.gradients(x, target)?;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;

    let mut compare = |select: fn(&mut Mlp) -> &mut Vec<f64>, grads: &[f64]| -> Result<(), NnError> {
        for (idx, &a) in grads.iter().enumerate() {
            let original = select(&mut probe)[idx];
            select(&mut probe)[idx] = original + eps;
            let plus = probe.loss(x, target)?;
            select(&mut probe)[idx] = original - eps;
            let minus = probe.loss(x, target)?;
            select(&mut probe)[idx] = original;
            let numeric = (plus - minus) / (2.0 * eps);
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-12);
            worst = worst.max(rel);
        }
        Ok(())
    };
    compare(|m| &mut m.w1, &analytic.w1)?;
    compare(|m| &mut m.b1, &analytic.b1)?;
    compare(|m| &mut m.w2, &analytic.w2)?;
    compare(|m| &mut m.b2, &analytic.b2)?;
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

const MODEL_FORMAT: &str = "extruplan-mlp/1";

/// On-disk model. Parameters are decimal strings in Rust's shortest
/// round-trip form, so reloading is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub layer_sizes: [usize; 3],
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub w1: Vec<String>,
    pub b1: Vec<String>,
    pub w2: Vec<String>,
    pub b2: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingMeta>,
}

fn to_strings(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| v.to_string()).collect()
}

fn from_strings(name: &str, values: &[String], expected: usize) -> Result<Vec<f64>, NnError> {
    if values.len() != expected {
        return Err(NnError::InvalidModel(format!("{name} has {} values, expected {expected}", values.len())));
    }
    values
        .iter()
        .map(|s| match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(NnError::InvalidModel(format!("{name} holds non-finite or malformed value `{s}`"))),
        })
        .collect()
}

impl Mlp {
    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            layer_sizes: self.layer_sizes(),
            hidden_activation: self.hidden_activation,
            output_activation: self.output_activation,
            w1: to_strings(&self.w1),
            b1: to_strings(&self.b1),
            w2: to_strings(&self.w2),
            b2: to_strings(&self.b2),
            training: self.training.clone(),
        }
    }

    pub fn from_file(file: &ModelFile) -> Result<Self, NnError> {
        if file.format != MODEL_FORMAT {
            return Err(NnError::InvalidModel(format!("unknown format `{}`", file.format)));
        }
        let [inputs, hidden, outputs] = file.layer_sizes;
        if inputs == 0 || hidden == 0 || outputs == 0 {
            return Err(NnError::InvalidModel("layer sizes must be positive".into()));
        }
        Ok(Self {
            inputs,
            hidden,
            outputs,
            w1: from_strings("w1", &file.w1, hidden * inputs)?,
            b1: from_strings("b1", &file.b1, hidden)?,
            w2: from_strings("w2", &file.w2, outputs * hidden)?,
            b2: from_strings("b2", &file.b2, outputs)?,
            hidden_activation: file.hidden_activation,
            output_activation: file.output_activation,
            training: file.training.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, NnError> {
        Self::from_file(&serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NnError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NnError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
