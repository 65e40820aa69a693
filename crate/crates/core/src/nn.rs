//! Small dense rectifier networks with a softmax cross-entropy head.
//!
//! Parameters live in one flat vector so the optimizer and the gradient
//! checker can treat them uniformly. Layout: the optional embedding table
//! (`vocab_size x layer_sizes[0]`, row per token), then for each layer its
//! weight matrix (`out x in`, row-major) followed by its bias.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, DatasetKind, Features, Sample};
use crate::error::{Error, Result};
use crate::rng::{Rng, STREAM_INIT, STREAM_SHUFFLE};

/// Probabilities are clamped below at this value before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InputLayer {
    /// Dense features feed the first layer directly.
    Dense,
    /// Token ids are mapped to learned vectors and averaged.
    Embedding { vocab_size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input: InputLayer,
    /// Input width (or embedding width), hidden widths, class count.
    pub layer_sizes: Vec<usize>,
}

impl ModelSpec {
    pub fn dense(layer_sizes: Vec<usize>) -> Self {
        Self { input: InputLayer::Dense, layer_sizes }
    }

    pub fn embedding(vocab_size: usize, layer_sizes: Vec<usize>) -> Self {
        Self { input: InputLayer::Embedding { vocab_size }, layer_sizes }
    }

    /// A spec matching `d`'s input and class count, with the given hidden
    /// widths. For text data `embedding_dim` sets the embedding width.
    pub fn for_dataset(d: &Dataset, hidden: &[usize], embedding_dim: usize) -> Self {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        match d.kind() {
            DatasetKind::Dense { dim } => {
                sizes.push(*dim);
                sizes.extend_from_slice(hidden);
                sizes.push(d.class_count());
                Self::dense(sizes)
            }
            DatasetKind::Text { vocab } => {
                sizes.push(embedding_dim);
                sizes.extend_from_slice(hidden);
                sizes.push(d.class_count());
                Self::embedding(vocab.len(), sizes)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least input and output sizes, got {:?}",
                self.layer_sizes
            )));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::InvalidSpec("layer sizes must be positive".into()));
        }
        if let InputLayer::Embedding { vocab_size: 0 } = self.input {
            return Err(Error::InvalidSpec("empty vocabulary".into()));
        }
        Ok(())
    }

    /// Checks that the spec can consume `d`.
    pub fn check_dataset(&self, d: &Dataset) -> Result<()> {
        self.validate()?;
        let out = *self.layer_sizes.last().unwrap();
        if out != d.class_count() {
            return Err(Error::ShapeMismatch(format!(
                "model has {out} outputs, dataset has {} classes",
                d.class_count()
            )));
        }
        match (&self.input, d.kind()) {
            (InputLayer::Dense, DatasetKind::Dense { dim }) if *dim == self.layer_sizes[0] => Ok(()),
            (InputLayer::Embedding { vocab_size }, DatasetKind::Text { vocab }) if *vocab_size == vocab.len() => Ok(()),
            (input, kind) => Err(Error::ShapeMismatch(format!(
                "model input {input:?} with layer {} cannot read dataset {}",
                self.layer_sizes[0],
                match kind {
                    DatasetKind::Dense { dim } => format!("of dense dim {dim}"),
                    DatasetKind::Text { vocab } => format!("with vocabulary {}", vocab.len()),
                }
            ))),
        }
    }

    fn embedding_len(&self) -> usize {
        match self.input {
            InputLayer::Dense => 0,
            InputLayer::Embedding { vocab_size } => vocab_size * self.layer_sizes[0],
        }
    }

    pub fn param_count(&self) -> usize {
        self.embedding_len() + self.layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum::<usize>()
    }

    /// Offsets of each layer's weights and biases in the flat vector.
    fn layer_offsets(&self) -> Vec<(usize, usize)> {
        let mut at = self.embedding_len();
        self.layer_sizes
            .windows(2)
            .map(|w| {
                let weights = at;
                let bias = at + w[0] * w[1];
                at = bias + w[1];
                (weights, bias)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    spec: ModelSpec,
    values: Vec<f64>,
}

impl ModelParams {
    pub fn from_flat(spec: ModelSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} parameters given, spec needs {}",
                values.len(),
                spec.param_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("non-finite parameter".into()));
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: ModelSpec) -> Result<Self> {
        let n = spec.param_count();
        Self::from_flat(spec, vec![0.0; n])
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: ModelParams = serde_json::from_str(&text)?;
        Self::from_flat(raw.spec, raw.values)
    }
}

/// He-style uniform initialization: weights in `±sqrt(6 / fan_in)`, zero
/// biases, embeddings in `±0.5`.
pub fn init_model(spec: &ModelSpec, rng: &mut Rng) -> Result<ModelParams> {
    spec.validate()?;
    let mut values = vec![0.0; spec.param_count()];
    for v in &mut values[..spec.embedding_len()] {
        *v = rng.next_f64() - 0.5;
    }
    for ((w_at, b_at), w) in spec.layer_offsets().into_iter().zip(spec.layer_sizes.windows(2)) {
        let bound = (6.0 / w[0] as f64).sqrt();
        for v in &mut values[w_at..b_at] {
            *v = (2.0 * rng.next_f64() - 1.0) * bound;
        }
    }
    ModelParams::from_flat(spec.clone(), values)
}

/// Convenience: initialize from a seed on the `"init"` stream.
pub fn init_model_seeded(spec: &ModelSpec, seed: u64) -> Result<ModelParams> {
    init_model(spec, &mut Rng::new(seed, STREAM_INIT))
}

/// Per-sample forward/backward scratch space.
struct Workspace {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Workspace {
    fn new(spec: &ModelSpec) -> Self {
        Self {
            acts: spec.layer_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            delta: Vec::new(),
            delta_prev: Vec::new(),
        }
    }
}

fn load_input(params: &ModelParams, sample: &Sample, input: &mut [f64]) {
    match (&params.spec.input, &sample.features) {
        (InputLayer::Dense, Features::Dense(x)) => input.copy_from_slice(x),
        (InputLayer::Embedding { .. }, Features::Tokens(tokens)) => {
            let width = input.len();
            input.fill(0.0);
            for &t in tokens {
                let row = &params.values[t as usize * width..(t as usize + 1) * width];
                input.iter_mut().zip(row).for_each(|(a, r)| *a += r);
            }
            let inv = 1.0 / tokens.len() as f64;
            input.iter_mut().for_each(|a| *a *= inv);
        }
        _ => unreachable!("spec checked against dataset"),
    }
}

/// Fills `ws.acts`; the last entry holds the logits.
fn forward(params: &ModelParams, sample: &Sample, ws: &mut Workspace) {
    load_input(params, sample, &mut ws.acts[0]);
    let layers = params.spec.layer_offsets();
    let last = layers.len() - 1;
    for (l, (w_at, b_at)) in layers.into_iter().enumerate() {
        let (head, tail) = ws.acts.split_at_mut(l + 1);
        let input = &head[l];
        let output = &mut tail[0];
        let fan_in = input.len();
        for (j, out) in output.iter_mut().enumerate() {
            let row = &params.values[w_at + j * fan_in..w_at + (j + 1) * fan_in];
            let z = params.values[b_at + j] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
            *out = if l < last { z.max(0.0) } else { z };
        }
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Cross-entropy of `logits` against `label`, with the probability floor.
fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    (log_sum_exp(logits) - logits[label]).min(-PROB_FLOOR.ln())
}

/// Adds this sample's loss gradient, scaled by `scale`, into `grad`.
fn backward(params: &ModelParams, sample: &Sample, label: usize, scale: f64, ws: &mut Workspace, grad: &mut [f64]) {
    let logits = ws.acts.last().unwrap();
    let lse = log_sum_exp(logits);
    ws.delta.clear();
    ws.delta.extend(logits.iter().map(|z| (z - lse).exp()));
    ws.delta[label] -= 1.0;

    let layers = params.spec.layer_offsets();
    for (l, &(w_at, b_at)) in layers.iter().enumerate().rev() {
        let input = &ws.acts[l];
        let fan_in = input.len();
        for (j, &dj) in ws.delta.iter().enumerate() {
            let g = dj * scale;
            grad[b_at + j] += g;
            let row = &mut grad[w_at + j * fan_in..w_at + (j + 1) * fan_in];
            row.iter_mut().zip(input).for_each(|(gw, x)| *gw += g * x);
        }
        let needs_input_delta = l > 0 || params.spec.embedding_len() > 0;
        if !needs_input_delta {
            break;
        }
        ws.delta_prev.clear();
        ws.delta_prev.resize(fan_in, 0.0);
        for (j, &dj) in ws.delta.iter().enumerate() {
            let row = &params.values[w_at + j * fan_in..w_at + (j + 1) * fan_in];
            ws.delta_prev.iter_mut().zip(row).for_each(|(d, w)| *d += dj * w);
        }
        if l > 0 {
            // Rectifier derivative, taken as 0 at the kink.
            ws.delta_prev.iter_mut().zip(input).for_each(|(d, &a)| {
                if a <= 0.0 {
                    *d = 0.0;
                }
            });
        }
        std::mem::swap(&mut ws.delta, &mut ws.delta_prev);
    }

    if let (InputLayer::Embedding { .. }, Features::Tokens(tokens)) = (&params.spec.input, &sample.features) {
        // ws.delta now holds dLoss/d(input average).
        let width = params.spec.layer_sizes[0];
        let share = scale / tokens.len() as f64;
        for &t in tokens {
            let row = &mut grad[t as usize * width..(t as usize + 1) * width];
            row.iter_mut().zip(&ws.delta).for_each(|(g, d)| *g += share * d);
        }
    }
}

/// Raw output scores for every sample.
pub fn logits(params: &ModelParams, d: &Dataset) -> Result<Vec<Vec<f64>>> {
    params.spec.check_dataset(d)?;
    let mut ws = Workspace::new(&params.spec);
    Ok(d.samples()
        .iter()
        .map(|s| {
            forward(params, s, &mut ws);
            ws.acts.last().unwrap().clone()
        })
        .collect())
}

/// Softmax cross-entropy of every sample under `params`.
pub fn per_sample_loss(params: &ModelParams, d: &Dataset) -> Result<Vec<f64>> {
    params.spec.check_dataset(d)?;
    let mut ws = Workspace::new(&params.spec);
    Ok(d.samples()
        .iter()
        .map(|s| {
            forward(params, s, &mut ws);
            cross_entropy(ws.acts.last().unwrap(), s.label)
        })
        .collect())
}

/// Argmax class per sample, ties to the lowest class index.
pub fn predict(params: &ModelParams, d: &Dataset) -> Result<Vec<usize>> {
    Ok(logits(params, d)?
        .iter()
        .map(|z| {
            z.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (c, &v)| if v > best.1 { (c, v) } else { best }).0
        })
        .collect())
}

/// Top-1 accuracy on `d`.
pub fn evaluate(params: &ModelParams, d: &Dataset) -> Result<f64> {
    let predicted = predict(params, d)?;
    let correct = predicted.iter().zip(d.samples()).filter(|(p, s)| **p == s.label).count();
    Ok(correct as f64 / d.len() as f64)
}

/// Mean loss over `indices` and its gradient.
pub fn loss_and_gradient(params: &ModelParams, d: &Dataset, indices: &[usize]) -> Result<(f64, Vec<f64>)> {
    params.spec.check_dataset(d)?;
    let mut grad = vec![0.0; params.values.len()];
    let mut ws = Workspace::new(&params.spec);
    let scale = 1.0 / indices.len() as f64;
    let mut loss = 0.0;
    for &i in indices {
        let s = d.sample(i);
        forward(params, s, &mut ws);
        loss += cross_entropy(ws.acts.last().unwrap(), s.label);
        backward(params, s, s.label, scale, &mut ws, &mut grad);
    }
    Ok((loss * scale, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
    Sgd,
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 10, batch_size: 32, learning_rate: 1e-2, optimizer: Optimizer::default(), seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning_rate {} must be positive", self.learning_rate)));
        }
        Ok(())
    }
}

/// Mini-batch optimizer whose state survives across epochs, so a curriculum
/// can change the training subset between epochs of one continuous run.
#[derive(Debug, Clone)]
pub struct Trainer {
    params: ModelParams,
    cfg: TrainConfig,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    steps: u64,
    epochs_run: usize,
    shuffle: Rng,
}

impl Trainer {
    pub fn new(params: ModelParams, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let n = params.values.len();
        let shuffle = Rng::new(cfg.seed, STREAM_SHUFFLE);
        Ok(Self {
            params,
            cfg,
            first_moment: vec![0.0; n],
            second_moment: vec![0.0; n],
            steps: 0,
            epochs_run: 0,
            shuffle,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn into_params(self) -> ModelParams {
        self.params
    }

    pub fn epochs_run(&self) -> usize {
        self.epochs_run
    }

    /// One pass over `indices` in a freshly shuffled order. Returns the mean
    /// per-sample loss seen during the pass.
    pub fn run_epoch(&mut self, d: &Dataset, indices: &[usize]) -> Result<f64> {
        self.params.spec.check_dataset(d)?;
        if let Some(&bad) = indices.iter().find(|&&i| i >= d.len()) {
            return Err(Error::ShapeMismatch(format!("index {bad} out of range for {} samples", d.len())));
        }
        if indices.is_empty() {
            return Err(Error::InvalidConfig("empty epoch subset".into()));
        }
        let mut order = indices.to_vec();
        self.shuffle.shuffle(&mut order);
        let mut total = 0.0;
        for batch in order.chunks(self.cfg.batch_size) {
            let (loss, grad) = loss_and_gradient(&self.params, d, batch)?;
            total += loss * batch.len() as f64;
            self.step(&grad);
        }
        self.epochs_run += 1;
        let mean = total / indices.len() as f64;
        if !mean.is_finite() || self.params.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch: self.epochs_run });
        }
        Ok(mean)
    }

    fn step(&mut self, grad: &[f64]) {
        self.steps += 1;
        let lr = self.cfg.learning_rate;
        match self.cfg.optimizer {
            Optimizer::Sgd => {
                self.params.values.iter_mut().zip(grad).for_each(|(p, g)| *p -= lr * g);
            }
            Optimizer::Adam { beta1, beta2, epsilon } => {
                let t = self.steps as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for (((p, g), m), v) in
                    self.params.values.iter_mut().zip(grad).zip(&mut self.first_moment).zip(&mut self.second_moment)
                {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + epsilon);
                }
            }
        }
    }
}

/// Runs `cfg.epochs` epochs. Epoch `e` uses `subsets[e]` when given,
/// otherwise all of `d`.
pub fn train(
    params: ModelParams,
    d: &Dataset,
    cfg: &TrainConfig,
    subsets: Option<&[Vec<usize>]>,
) -> Result<ModelParams> {
    cfg.validate()?;
    if let Some(s) = subsets {
        if s.len() < cfg.epochs {
            return Err(Error::InvalidConfig(format!("{} epoch subsets for {} epochs", s.len(), cfg.epochs)));
        }
    }
    let all: Vec<usize> = (0..d.len()).collect();
    let mut trainer = Trainer::new(params, cfg.clone())?;
    for e in 0..cfg.epochs {
        let indices = subsets.map_or(all.as_slice(), |s| s[e].as_slice());
        trainer.run_epoch(d, indices)?;
    }
    Ok(trainer.into_params())
}

/// Central-difference step used by [`gradient_check`].
pub const FD_STEP: f64 = 1e-5;

/// Largest relative disagreement between the analytic gradient of the mean
/// loss over `d` and central finite differences, over every parameter.
/// The relative error of one entry is `|a - n| / max(|a| + |n|, 1e-6)`.
pub fn gradient_check(params: &ModelParams, d: &Dataset) -> Result<f64> {
    if d.len() > 16 {
        return Err(Error::InvalidConfig(format!("gradient check needs at most 16 samples, got {}", d.len())));
    }
    let all: Vec<usize> = (0..d.len()).collect();
    let (_, analytic) = loss_and_gradient(params, d, &all)?;
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    for (i, &a) in analytic.iter().enumerate() {
        let original = probe.values[i];
        probe.values[i] = original + FD_STEP;
        let plus = mean_loss(&probe, d)?;
        probe.values[i] = original - FD_STEP;
        let minus = mean_loss(&probe, d)?;
        probe.values[i] = original;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    Ok(worst)
}

fn mean_loss(params: &ModelParams, d: &Dataset) -> Result<f64> {
    let losses = per_sample_loss(params, d)?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}
