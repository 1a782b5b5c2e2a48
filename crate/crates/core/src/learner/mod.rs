//! Feedforward multi-label classifier trained with mean
//! binary-cross-entropy-with-logits and mini-batch SGD with momentum.
//!
//! Hidden layers use ReLU; the output layer emits 41 raw logits. Parameters
//! live in one flat buffer holding, for each layer in order, its weights
//! (`in x out`, row-major, so row `i` holds the fan-out of input `i`)
//! followed by its `out` biases.

mod features;
mod file;

pub use features::{
    featurize, raw_features, Encoding, FeatureStats, FeatureVector, BASE_DIM, BASE_NAMES, GRID,
    NUMERIC_DIM, ONE_HOT, THERMOMETER_BITS,
};
pub use file::{ModelFileError, MODEL_MAGIC};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::eval;
use crate::post::{self, LogitVector};
use crate::scalar::{sigmoid, Scalar};
use crate::scenario::Scenario;
use crate::schema::{canonical_schema, LabelVector, NUM_LABELS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("loss became non-finite in epoch {epoch}")]
    Divergence { epoch: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Reduction {
    /// Average over samples and labels.
    Mean,
    /// Sum over samples and labels.
    Sum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: T,
    pub momentum: T,
    /// L2 coefficient added to every parameter's gradient.
    pub weight_decay: T,
    pub seed: u64,
    /// Widths of the hidden layers, input side first.
    pub hidden: Vec<usize>,
    pub encoding: Encoding,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 32,
            learning_rate: T::lit(0.1),
            momentum: T::lit(0.9),
            weight_decay: T::lit(1e-4),
            seed: 0,
            hidden: vec![64, 64],
            encoding: Encoding::Thermometer,
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    /// One hidden layer of 64 units on the 18 base features, no decay.
    pub fn single_layer() -> Self {
        TrainConfig {
            learning_rate: T::lit(0.01),
            weight_decay: T::zero(),
            hidden: vec![64],
            encoding: Encoding::Standardized,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(LearnError::Config("epochs and batch size must be positive".into()));
        }
        if self.hidden.is_empty() || self.hidden.iter().any(|&h| h == 0 || h > file::MAX_WIDTH) {
            return Err(LearnError::Config(format!(
                "need at least one hidden layer, each 1..={} wide",
                file::MAX_WIDTH
            )));
        }
        if self.hidden.len() + 1 > file::MAX_LAYERS {
            return Err(LearnError::Config(format!("at most {} hidden layers", file::MAX_LAYERS - 1)));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > T::zero()) {
            return Err(LearnError::Config("learning rate must be positive".into()));
        }
        if !(self.momentum.is_finite() && self.momentum >= T::zero() && self.momentum < T::one()) {
            return Err(LearnError::Config("momentum must lie in [0, 1)".into()));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= T::zero()) {
            return Err(LearnError::Config("weight decay must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T> {
    encoding: Encoding,
    /// Layer widths from input to output.
    sizes: Vec<usize>,
    params: Vec<T>,
    stats: FeatureStats<T>,
}

/// Numerically stable BCE with logits for one cell.
fn bce<T: Scalar>(z: T, y: T) -> T {
    z.max(T::zero()) - z * y + (T::one() + (-z.abs()).exp()).ln()
}

/// `out = b + x W`, skipping zero inputs.
fn affine<T: Scalar>(x: &[T], w: &[T], b: &[T]) -> Vec<T> {
    let n = b.len();
    let mut out = b.to_vec();
    for (i, &xi) in x.iter().enumerate() {
        if xi == T::zero() {
            continue;
        }
        for (o, wv) in out.iter_mut().zip(&w[i * n..(i + 1) * n]) {
            *o += xi * *wv;
        }
    }
    out
}

impl<T: Scalar> MlpModel<T> {
    pub fn zeros(encoding: Encoding, hidden: &[usize], stats: FeatureStats<T>) -> Self {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(encoding.dim());
        sizes.extend_from_slice(hidden);
        sizes.push(NUM_LABELS);
        let n = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        MlpModel {
            encoding,
            sizes,
            params: vec![T::zero(); n],
            stats,
        }
    }

    /// Weights and biases uniform in `±1/sqrt(fan_in)`.
    pub fn init<R: Rng>(encoding: Encoding, hidden: &[usize], stats: FeatureStats<T>, rng: &mut R) -> Self {
        let mut m = Self::zeros(encoding, hidden, stats);
        let mut at = 0;
        for l in 0..m.layers() {
            let (fan_in, out) = (m.sizes[l], m.sizes[l + 1]);
            let a = 1.0 / (fan_in as f64).sqrt();
            for p in &mut m.params[at..at + fan_in * out + out] {
                *p = T::lit(rng.gen_range(-a..a));
            }
            at += fan_in * out + out;
        }
        m
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two sizes")
    }

    pub fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn stats(&self) -> &FeatureStats<T> {
        &self.stats
    }

    /// Offsets of layer `l`'s weights and biases in the flat buffer.
    fn layer_offsets(&self, l: usize) -> (usize, usize) {
        let w = self.sizes.windows(2).take(l).map(|s| s[0] * s[1] + s[1]).sum::<usize>();
        (w, w + self.sizes[l] * self.sizes[l + 1])
    }

    fn layer_params(&self, l: usize) -> (&[T], &[T]) {
        let (w, b) = self.layer_offsets(l);
        let out = self.sizes[l + 1];
        (&self.params[w..b], &self.params[b..b + out])
    }

    /// Outputs of every layer: ReLU activations, then the logits.
    fn forward(&self, x: &[T]) -> Vec<Vec<T>> {
        let mut outs: Vec<Vec<T>> = Vec::with_capacity(self.layers());
        for l in 0..self.layers() {
            let (w, b) = self.layer_params(l);
            let input = if l == 0 { x } else { &outs[l - 1] };
            let mut z = affine(input, w, b);
            if l + 1 < self.layers() {
                z.iter_mut().for_each(|v| *v = v.max(T::zero()));
            }
            outs.push(z);
        }
        outs
    }

    pub fn featurize(&self, s: &Scenario) -> FeatureVector<T> {
        featurize(s, &self.stats, self.encoding)
    }

    /// Logits for an already encoded feature vector.
    pub fn logits_from_features(&self, x: &[T]) -> Vec<T> {
        self.forward(x).pop().expect("at least one layer")
    }

    pub fn predict_logits(&self, s: &Scenario) -> LogitVector<T> {
        LogitVector::new(self.logits_from_features(&self.featurize(s)))
            .expect("finite parameters give finite logits")
    }

    /// Batch inference fanned out over the rayon pool.
    pub fn predict_batch(&self, scenarios: &[Scenario]) -> Vec<LogitVector<T>> {
        scenarios.par_iter().map(|s| self.predict_logits(s)).collect()
    }

    fn target(y: &LabelVector, i: usize) -> T {
        if y.get(i) {
            T::one()
        } else {
            T::zero()
        }
    }

    fn reduce(reduction: Reduction, n: usize) -> T {
        match reduction {
            Reduction::Mean => T::one() / T::from_count(n * NUM_LABELS),
            Reduction::Sum => T::one(),
        }
    }

    pub fn loss(&self, batch: &[(FeatureVector<T>, LabelVector)], reduction: Reduction) -> T {
        let total = batch.iter().fold(T::zero(), |acc, (x, y)| {
            let z = self.logits_from_features(x);
            z.iter()
                .enumerate()
                .fold(acc, |a, (i, zi)| a + bce(*zi, Self::target(y, i)))
        });
        total * Self::reduce(reduction, batch.len())
    }

    /// Loss and analytic gradient with respect to every parameter.
    pub fn gradient(&self, batch: &[(FeatureVector<T>, LabelVector)], reduction: Reduction) -> (T, Vec<T>) {
        let mut grad = vec![T::zero(); self.params.len()];
        let mut total = T::zero();
        let scale = Self::reduce(reduction, batch.len());
        let offsets: Vec<(usize, usize)> = (0..self.layers()).map(|l| self.layer_offsets(l)).collect();

        for (x, y) in batch {
            let outs = self.forward(x);
            let logits = outs.last().expect("at least one layer");
            let mut delta: Vec<T> = logits
                .iter()
                .enumerate()
                .map(|(i, &z)| {
                    let t = Self::target(y, i);
                    total += bce(z, t);
                    (sigmoid(z) - t) * scale
                })
                .collect();
            for l in (0..self.layers()).rev() {
                let (wo, bo) = offsets[l];
                let out = self.sizes[l + 1];
                let input: &[T] = if l == 0 { x } else { &outs[l - 1] };
                for (g, d) in grad[bo..bo + out].iter_mut().zip(&delta) {
                    *g += *d;
                }
                for (i, &a) in input.iter().enumerate() {
                    if a == T::zero() {
                        continue;
                    }
                    for (g, d) in grad[wo + i * out..wo + (i + 1) * out].iter_mut().zip(&delta) {
                        *g += a * *d;
                    }
                }
                if l == 0 {
                    break;
                }
                // back through the weights, then the ReLU of the layer below
                let w = &self.params[wo..bo];
                delta = input
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| {
                        if a > T::zero() {
                            w[i * out..(i + 1) * out]
                                .iter()
                                .zip(&delta)
                                .fold(T::zero(), |s, (wv, d)| s + *wv * *d)
                        } else {
                            T::zero()
                        }
                    })
                    .collect();
            }
        }
        (total * scale, grad)
    }
}

/// Per-epoch entry of the training log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_main_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_overall_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_reason_f1: Option<f64>,
}

fn encoded<T: Scalar>(
    data: &[(Scenario, LabelVector)],
    stats: &FeatureStats<T>,
    encoding: Encoding,
) -> Vec<(FeatureVector<T>, LabelVector)> {
    data.iter().map(|(s, y)| (featurize(s, stats, encoding), *y)).collect()
}

/// Post-processed predictions at the default threshold.
pub fn predict_labels<T: Scalar>(m: &MlpModel<T>, scenarios: &[Scenario]) -> Vec<LabelVector> {
    let schema = canonical_schema();
    let threshold = T::lit(post::DEFAULT_THRESHOLD);
    m.predict_batch(scenarios)
        .iter()
        .map(|l| {
            post::decide(l, &schema, threshold)
                .expect("threshold is valid")
                .to_label_vector()
        })
        .collect()
}

fn validation_metrics<T: Scalar>(
    m: &MlpModel<T>,
    val: &[(Scenario, LabelVector)],
    feats: &[(FeatureVector<T>, LabelVector)],
    entry: &mut EpochMetrics,
) {
    if val.is_empty() {
        return;
    }
    let scenarios: Vec<Scenario> = val.iter().map(|(s, _)| *s).collect();
    let truth: Vec<LabelVector> = val.iter().map(|(_, y)| *y).collect();
    let pred = predict_labels(m, &scenarios);
    let report = eval::MetricsReport::compute(&truth, &pred, None).expect("same shape, non-empty");
    entry.val_loss = Some(m.loss(feats, Reduction::Mean).as_f64());
    entry.val_main_accuracy = Some(report.main_accuracy);
    entry.val_overall_f1 = Some(report.overall_f1);
    entry.val_reason_f1 = Some(report.reason_f1);
}

/// Trains a fresh model; `on_epoch` receives one log entry per epoch.
///
/// Standardization statistics come from `train` only. Everything random
/// (initialization and shuffling) flows from `config.seed`.
pub fn train<T: Scalar>(
    train: &[(Scenario, LabelVector)],
    val: Option<&[(Scenario, LabelVector)]>,
    config: &TrainConfig<T>,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<MlpModel<T>, LearnError> {
    config.validate()?;
    if train.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let stats = FeatureStats::<T>::fit(train.iter().map(|(s, _)| s));
    let data = encoded(train, &stats, config.encoding);
    let val_data = val.map(|v| encoded(v, &stats, config.encoding)).unwrap_or_default();
    let mut model = MlpModel::init(config.encoding, &config.hidden, stats, &mut rng);
    let mut velocity = vec![T::zero(); model.params.len()];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch = Vec::with_capacity(config.batch_size);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = T::zero();
        let mut seen = 0usize;
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i].clone()));
            let (loss, grad) = model.gradient(&batch, Reduction::Mean);
            if !loss.is_finite() {
                return Err(LearnError::Divergence { epoch });
            }
            loss_sum += loss * T::from_count(chunk.len());
            seen += chunk.len();
            for ((p, v), g) in model.params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = config.momentum * *v + *g + config.weight_decay * *p;
                *p -= config.learning_rate * *v;
            }
        }
        if model.params.iter().any(|p| !p.is_finite()) {
            return Err(LearnError::Divergence { epoch });
        }
        let mut entry = EpochMetrics {
            epoch,
            train_loss: (loss_sum / T::from_count(seen)).as_f64(),
            val_loss: None,
            val_main_accuracy: None,
            val_overall_f1: None,
            val_reason_f1: None,
        };
        if let Some(v) = val {
            validation_metrics(&model, v, &val_data, &mut entry);
        }
        on_epoch(&entry);
    }
    Ok(model)
}

/// Largest relative gap between analytic gradients and central finite
/// differences (step 1e-4) over `samples` randomly chosen parameters.
pub fn gradient_check<T: Scalar>(
    model: &MlpModel<T>,
    batch: &[(FeatureVector<T>, LabelVector)],
    reduction: Reduction,
    samples: usize,
    seed: u64,
) -> T {
    let step = T::lit(1e-4);
    let floor = T::lit(1e-10);
    let (_, analytic) = model.gradient(batch, reduction);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = model.clone();
    let mut worst = T::zero();
    for _ in 0..samples {
        let k = rng.gen_range(0..model.params.len());
        let orig = probe.params[k];
        probe.params[k] = orig + step;
        let up = probe.loss(batch, reduction);
        probe.params[k] = orig - step;
        let down = probe.loss(batch, reduction);
        probe.params[k] = orig;
        let numeric = (up - down) / (step + step);
        let a = analytic[k];
        let denom = a.abs().max(numeric.abs());
        if denom > floor {
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    worst
}
