//! From-scratch multilayer network: ReLU hidden layers, softmax output,
//! squared-error objective, minibatch gradient descent with momentum.
//!
//! The squared-error-through-softmax pairing is unusual but deliberate;
//! cross-entropy is available behind [`LossKind::CrossEntropy`] and is off
//! by default.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;

/// Input, hidden, hidden, output widths used throughout the experiments.
pub const PAPER_LAYOUT: [usize; 4] = [784, 128, 164, 10];

/// Samples per parallel gradient-accumulation chunk.
const GRAD_CHUNK: usize = 32;

/// Feedforward network with ReLU hidden layers and a softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlnModel {
    sizes: Vec<usize>,
    /// Per layer, `out x in` row-major.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl MlnModel {
    /// Builds a model from explicit parameters.
    pub fn from_parts(
        sizes: Vec<usize>,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if sizes.len() < 2 || weights.len() != sizes.len() - 1 || biases.len() != sizes.len() - 1
        {
            return Err(Error::ShapeMismatch {
                context: "layer count mismatch".into(),
            });
        }
        for l in 0..sizes.len() - 1 {
            if weights[l].len() != sizes[l] * sizes[l + 1] || biases[l].len() != sizes[l + 1] {
                return Err(Error::ShapeMismatch {
                    context: format!("layer {l} parameter shapes"),
                });
            }
        }
        Ok(Self {
            sizes,
            weights,
            biases,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    /// Output distribution for one input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.sizes[0] {
            return Err(Error::ShapeMismatch {
                context: format!("input length {} != {}", x.len(), self.sizes[0]),
            });
        }
        let mut a = x.to_vec();
        for l in 0..self.n_layers() {
            let z = affine(&self.weights[l], &self.biases[l], &a, self.sizes[l]);
            a = if l + 1 == self.n_layers() {
                softmax(&z)
            } else {
                z.iter().map(|&v| v.max(0.0)).collect()
            };
        }
        Ok(a)
    }

    /// Forward pass retaining pre-activations and activations per layer.
    fn forward_trace(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut activations = vec![x.to_vec()];
        let mut pre = Vec::with_capacity(self.n_layers());
        for l in 0..self.n_layers() {
            let z = affine(
                &self.weights[l],
                &self.biases[l],
                &activations[l],
                self.sizes[l],
            );
            let a = if l + 1 == self.n_layers() {
                softmax(&z)
            } else {
                z.iter().map(|&v| v.max(0.0)).collect()
            };
            pre.push(z);
            activations.push(a);
        }
        (activations, pre)
    }

    /// Predicted label: argmax of the output (ties to the lowest label).
    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        let out = self.forward(x)?;
        let mut best = 0usize;
        for (j, &v) in out.iter().enumerate() {
            if v > out[best] {
                best = j;
            }
        }
        Ok(best as u8)
    }

    /// Fraction of rows misclassified.
    pub fn error_rate(&self, features: &FeatureMatrix, labels: &[u8]) -> Result<f64> {
        let errors = self.count_errors(features, labels)?;
        Ok(errors as f64 / features.n() as f64)
    }

    pub fn count_errors(&self, features: &FeatureMatrix, labels: &[u8]) -> Result<usize> {
        if features.n() != labels.len() {
            return Err(Error::LengthMismatch {
                left: features.n(),
                right: labels.len(),
            });
        }
        let preds = self.predict_batch(features)?;
        Ok(preds.iter().zip(labels).filter(|(p, t)| p != t).count())
    }

    pub fn predict_batch(&self, features: &FeatureMatrix) -> Result<Vec<u8>> {
        let indices: Vec<usize> = (0..features.n()).collect();
        indices
            .par_chunks(256)
            .map(|chunk| {
                chunk
                    .iter()
                    .map(|&i| self.predict(features.row(i)))
                    .collect::<Result<Vec<u8>>>()
            })
            .collect::<Result<Vec<Vec<u8>>>>()
            .map(|chunks| chunks.into_iter().flatten().collect())
    }
}

fn affine(w: &[f64], b: &[f64], x: &[f64], n_in: usize) -> Vec<f64> {
    b.iter()
        .enumerate()
        .map(|(o, &bias)| {
            let row = &w[o * n_in..(o + 1) * n_in];
            let mut acc = bias;
            for (&wi, &xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            acc
        })
        .collect()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Symmetric fan-based uniform initialization; biases start at zero.
pub fn mln_init(sizes: &[usize], seed: u64) -> MlnModel {
    assert!(sizes.len() >= 2, "a network needs at least two layer sizes");
    let mut rng = rng_from_seed(seed);
    let mut weights = Vec::with_capacity(sizes.len() - 1);
    let mut biases = Vec::with_capacity(sizes.len() - 1);
    for l in 0..sizes.len() - 1 {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let bound = (6.0 / (n_in + n_out) as f64).sqrt();
        let w: Vec<f64> = (0..n_in * n_out)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        weights.push(w);
        biases.push(vec![0.0; n_out]);
    }
    MlnModel {
        sizes: sizes.to_vec(),
        weights,
        biases,
    }
}

/// Training objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    #[default]
    SquaredError,
    CrossEntropy,
}

/// Squared error between the output distribution and the one-hot target.
pub fn mln_loss(output: &[f64], target_label: u8) -> Result<f64> {
    loss_value(LossKind::SquaredError, output, target_label)
}

pub fn loss_value(kind: LossKind, output: &[f64], target_label: u8) -> Result<f64> {
    let t = target_label as usize;
    if t >= output.len() {
        return Err(Error::LabelOutOfRange {
            index: 0,
            value: target_label,
        });
    }
    Ok(match kind {
        LossKind::SquaredError => output
            .iter()
            .enumerate()
            .map(|(j, &a)| {
                let tj = if j == t { 1.0 } else { 0.0 };
                (a - tj) * (a - tj)
            })
            .sum(),
        LossKind::CrossEntropy => -output[t].max(1e-300).ln(),
    })
}

/// Parameter gradients, shaped exactly like the model.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub dw: Vec<Vec<f64>>,
    pub db: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(model: &MlnModel) -> Self {
        Self {
            dw: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            db: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn add(&mut self, other: &Gradients) {
        for (a, b) in self.dw.iter_mut().zip(&other.dw) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.db.iter_mut().zip(&other.db) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    fn scale(&mut self, factor: f64) {
        for a in self.dw.iter_mut().chain(self.db.iter_mut()) {
            for x in a.iter_mut() {
                *x *= factor;
            }
        }
    }
}

/// Exact gradients of the loss for one sample, by backpropagation.
pub fn mln_backward(
    model: &MlnModel,
    x: &[f64],
    target_label: u8,
    kind: LossKind,
) -> Result<Gradients> {
    if x.len() != model.sizes[0] {
        return Err(Error::ShapeMismatch {
            context: format!("input length {} != {}", x.len(), model.sizes[0]),
        });
    }
    let n_out = *model.sizes.last().unwrap();
    if target_label as usize >= n_out {
        return Err(Error::LabelOutOfRange {
            index: 0,
            value: target_label,
        });
    }
    let (activations, pre) = model.forward_trace(x);
    let last = model.n_layers() - 1;
    let out = &activations[last + 1];
    let t = target_label as usize;

    // delta at the output pre-activation
    let mut delta: Vec<f64> = match kind {
        LossKind::SquaredError => {
            // dL/da = 2(a - t); through softmax: a_i * (g_i - sum_j g_j a_j)
            let g: Vec<f64> = out
                .iter()
                .enumerate()
                .map(|(j, &a)| 2.0 * (a - if j == t { 1.0 } else { 0.0 }))
                .collect();
            let s: f64 = g.iter().zip(out).map(|(&gj, &aj)| gj * aj).sum();
            out.iter().zip(&g).map(|(&a, &gj)| a * (gj - s)).collect()
        }
        LossKind::CrossEntropy => out
            .iter()
            .enumerate()
            .map(|(j, &a)| a - if j == t { 1.0 } else { 0.0 })
            .collect(),
    };

    let mut grads = Gradients::zeros_like(model);
    for l in (0..=last).rev() {
        let n_in = model.sizes[l];
        let a_prev = &activations[l];
        for (o, &d) in delta.iter().enumerate() {
            let row = &mut grads.dw[l][o * n_in..(o + 1) * n_in];
            for (ri, &ai) in row.iter_mut().zip(a_prev) {
                *ri = d * ai;
            }
            grads.db[l][o] = d;
        }
        if l > 0 {
            // delta_{l-1} = (W_l^T delta_l) * relu'(z_{l-1})
            let mut prev = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                let row = &model.weights[l][o * n_in..(o + 1) * n_in];
                for (p, &w) in prev.iter_mut().zip(row) {
                    *p += w * d;
                }
            }
            for (p, &z) in prev.iter_mut().zip(&pre[l - 1]) {
                if z <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
    }
    Ok(grads)
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub loss: LossKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.07,
            momentum: 0.9,
            epochs: 30,
            batch_size: 100,
            seed: 0,
            loss: LossKind::SquaredError,
        }
    }
}

/// Per-epoch measurements; epochs are numbered from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    /// Epoch (1-based) with the smallest validation error; earliest on ties.
    pub best_epoch: usize,
}

/// Result of a training run: the best-epoch checkpoint and the final state.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best_model: MlnModel,
    pub final_model: MlnModel,
    pub history: TrainHistory,
}

/// Minibatch gradient descent with momentum from a caller-supplied
/// initialization. Shuffling draws from `config.seed`; everything else is
/// deterministic.
pub fn mln_train(
    init: &MlnModel,
    train: (&FeatureMatrix, &[u8]),
    validation: (&FeatureMatrix, &[u8]),
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let (train_x, train_y) = train;
    let (val_x, val_y) = validation;
    if train_x.n() == 0 || val_x.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    if train_x.n() != train_y.len() {
        return Err(Error::LengthMismatch {
            left: train_x.n(),
            right: train_y.len(),
        });
    }
    let mut model = init.clone();
    let mut velocity = Gradients::zeros_like(&model);
    let mut rng = rng_from_seed(config.seed);
    let mut indices: Vec<usize> = (0..train_x.n()).collect();

    let mut history = Vec::with_capacity(config.epochs);
    let mut best_epoch = 0usize;
    let mut best_error = f64::INFINITY;
    let mut best_model = model.clone();

    for epoch in 1..=config.epochs {
        // Fisher-Yates shuffle from the continuing seeded stream
        for i in (1..indices.len()).rev() {
            let j = rng.gen_range(0..=i);
            indices.swap(i, j);
        }

        let mut loss_sum = 0.0;
        for batch in indices.chunks(config.batch_size.max(1)) {
            let (batch_loss, mut grad) = batch_gradient(&model, train_x, train_y, batch, config.loss)?;
            loss_sum += batch_loss;
            grad.scale(1.0 / batch.len() as f64);

            for l in 0..model.n_layers() {
                for (v, &g) in velocity.dw[l].iter_mut().zip(&grad.dw[l]) {
                    *v = config.momentum * *v - config.learning_rate * g;
                }
                for (w, &v) in model.weights[l].iter_mut().zip(&velocity.dw[l]) {
                    *w += v;
                }
                for (v, &g) in velocity.db[l].iter_mut().zip(&grad.db[l]) {
                    *v = config.momentum * *v - config.learning_rate * g;
                }
                for (b, &v) in model.biases[l].iter_mut().zip(&velocity.db[l]) {
                    *b += v;
                }
            }
        }

        let val_error = model.error_rate(val_x, val_y)?;
        history.push(EpochStats {
            epoch,
            train_loss: loss_sum / train_x.n() as f64,
            val_error,
        });
        if val_error < best_error {
            best_error = val_error;
            best_epoch = epoch;
            best_model = model.clone();
        }
    }

    Ok(TrainOutcome {
        best_model,
        final_model: model,
        history: TrainHistory {
            epochs: history,
            best_epoch,
        },
    })
}

/// Summed loss and gradients over one minibatch, accumulated over fixed
/// chunks folded in order (schedule-independent).
fn batch_gradient(
    model: &MlnModel,
    x: &FeatureMatrix,
    y: &[u8],
    batch: &[usize],
    kind: LossKind,
) -> Result<(f64, Gradients)> {
    let partials: Vec<Result<(f64, Gradients)>> = batch
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut grad = Gradients::zeros_like(model);
            let mut loss = 0.0;
            for &i in chunk {
                let sample = mln_backward(model, x.row(i), y[i], kind)?;
                grad.add(&sample);
                loss += loss_value(kind, &model.forward(x.row(i))?, y[i])?;
            }
            Ok((loss, grad))
        })
        .collect();

    let mut total = Gradients::zeros_like(model);
    let mut loss = 0.0;
    for partial in partials {
        let (l, g) = partial?;
        loss += l;
        total.add(&g);
    }
    Ok((loss, total))
}

// --- flat binary serialization (same discipline as the mixture format) ---

const MAGIC: &[u8; 4] = b"MLNF";
const VERSION: u32 = 1;

pub fn mln_to_bytes(model: &MlnModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(model.sizes.len() as u32).to_le_bytes());
    for &s in &model.sizes {
        out.extend_from_slice(&(s as u32).to_le_bytes());
    }
    for l in 0..model.n_layers() {
        for &w in &model.weights[l] {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for &b in &model.biases[l] {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    out
}

pub fn mln_from_bytes(bytes: &[u8]) -> Result<MlnModel> {
    let bad = |m: &str| Error::BadModelFile(m.into());
    if bytes.len() < 12 || &bytes[0..4] != MAGIC {
        return Err(bad("bad magic"));
    }
    if u32::from_le_bytes(bytes[4..8].try_into().unwrap()) != VERSION {
        return Err(bad("unsupported version"));
    }
    let n_sizes = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if n_sizes < 2 {
        return Err(bad("layout too short"));
    }
    let mut off = 12;
    let mut sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        if bytes.len() < off + 4 {
            return Err(bad("truncated layout"));
        }
        sizes.push(u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize);
        off += 4;
    }
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for l in 0..n_sizes - 1 {
        let count = sizes[l] * sizes[l + 1] + sizes[l + 1];
        if bytes.len() < off + 8 * count {
            return Err(bad("truncated parameters"));
        }
        let mut w = Vec::with_capacity(sizes[l] * sizes[l + 1]);
        for _ in 0..sizes[l] * sizes[l + 1] {
            w.push(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
            off += 8;
        }
        let mut b = Vec::with_capacity(sizes[l + 1]);
        for _ in 0..sizes[l + 1] {
            b.push(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
            off += 8;
        }
        weights.push(w);
        biases.push(b);
    }
    if off != bytes.len() {
        return Err(bad("trailing bytes"));
    }
    Ok(MlnModel {
        sizes,
        weights,
        biases,
    })
}

pub fn write_mln(model: &MlnModel, path: &Path) -> Result<()> {
    std::fs::write(path, mln_to_bytes(model))?;
    Ok(())
}

pub fn read_mln(path: &Path) -> Result<MlnModel> {
    mln_from_bytes(&std::fs::read(path)?)
}
