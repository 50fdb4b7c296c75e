//! Mini-batch training over windowed sequences.
//!
//! The dataset abstraction hands out batches on demand so large corpora
//! (e.g. every window of a million-sample trace) never need to be
//! materialized. Each window is treated as its own sequence: state starts at
//! zero and the loss is taken at the final step (many-to-one prediction).

use ndarray::{Array2, Array3};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::backprop::bptt_final_step;
use super::{adam_step, AdamConfig, AdamState, RecurrentNet};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: AdamConfig,
    /// Upper bound on the window length processed per gradient step.
    pub bptt_window: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 256,
            epochs: 10,
            optimizer: AdamConfig::default(),
            bptt_window: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid_argument("batch_size must be >= 1"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid_argument("epochs must be >= 1"));
        }
        if self.bptt_window == 0 {
            return Err(Error::invalid_argument("bptt_window must be >= 1"));
        }
        Ok(())
    }
}

/// A dataset of (input window, final target) pairs that can assemble batches.
pub trait BatchSource<F: Real> {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn seq_len(&self) -> usize;
    fn input_size(&self) -> usize;
    fn output_size(&self) -> usize;
    /// Write the selected items into `(seq, input, batch)` inputs and
    /// `(output, batch)` targets; `items.len()` equals the batch dimension.
    fn fill(&self, items: &[usize], inputs: &mut Array3<F>, targets: &mut Array2<F>);
}

/// Small in-memory dataset, mostly for tests and toy problems.
#[derive(Debug, Clone)]
pub struct InMemoryDataset<F: Real> {
    /// `(n, seq, input)`
    pub inputs: Array3<F>,
    /// `(n, output)`
    pub targets: Array2<F>,
}

impl<F: Real> InMemoryDataset<F> {
    pub fn new(inputs: Array3<F>, targets: Array2<F>) -> Result<Self> {
        if inputs.dim().0 != targets.dim().0 {
            return Err(Error::invalid_argument("inputs and targets disagree on item count"));
        }
        Ok(Self { inputs, targets })
    }
}

impl<F: Real> BatchSource<F> for InMemoryDataset<F> {
    fn len(&self) -> usize {
        self.inputs.dim().0
    }
    fn seq_len(&self) -> usize {
        self.inputs.dim().1
    }
    fn input_size(&self) -> usize {
        self.inputs.dim().2
    }
    fn output_size(&self) -> usize {
        self.targets.dim().1
    }
    fn fill(&self, items: &[usize], inputs: &mut Array3<F>, targets: &mut Array2<F>) {
        for (col, &idx) in items.iter().enumerate() {
            for s in 0..self.seq_len() {
                for f in 0..self.input_size() {
                    inputs[[s, f, col]] = self.inputs[[idx, s, f]];
                }
            }
            for o in 0..self.output_size() {
                targets[[o, col]] = self.targets[[idx, o]];
            }
        }
    }
}

/// Loss trajectory of a training run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Mean batch loss per epoch.
    pub epoch_loss: Vec<f64>,
    pub batches_run: usize,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        *self.epoch_loss.last().unwrap_or(&f64::NAN)
    }
}

/// Train `net` in place: shuffled mini-batches, BPTT gradients, Adam steps.
/// Deterministic for a given config seed and dataset.
pub fn train<F: Real, S: BatchSource<F>>(
    net: &mut RecurrentNet<F>,
    data: &S,
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::invalid_argument("empty training dataset"));
    }
    if data.seq_len() > config.bptt_window {
        return Err(Error::invalid_argument(format!(
            "window length {} exceeds bptt_window {}",
            data.seq_len(),
            config.bptt_window
        )));
    }
    if data.input_size() != net.input_size() || data.output_size() != net.output_size() {
        return Err(Error::ShapeMismatch {
            context: "training dataset",
            expected: format!("{}-in/{}-out", net.input_size(), net.output_size()),
            actual: format!("{}-in/{}-out", data.input_size(), data.output_size()),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::new(config.optimizer, net);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut report = TrainReport { epoch_loss: Vec::with_capacity(config.epochs), batches_run: 0 };

    for _epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let b = chunk.len();
            let mut inputs = Array3::zeros((data.seq_len(), data.input_size(), b));
            let mut targets = Array2::zeros((data.output_size(), b));
            data.fill(chunk, &mut inputs, &mut targets);
            let (grads, loss) = bptt_final_step(net, &inputs.view(), &targets.view())?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged(format!("loss became {loss}")));
            }
            adam_step(net, &grads, &mut adam)?;
            epoch_loss += loss;
            batches += 1;
        }
        report.epoch_loss.push(epoch_loss / batches as f64);
        report.batches_run += batches;
    }
    Ok(report)
}
