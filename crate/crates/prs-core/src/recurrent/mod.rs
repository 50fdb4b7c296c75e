//! Minimal recurrent-network engine: dense, simple-RNN, LSTM and GRU layers
//! with truncated backpropagation-through-time, MSE loss and Adam.
//!
//! Gate conventions (fixed by the channel-prediction model): recurrent
//! candidates and cell outputs use `tanh`, gates use the logistic sigmoid.
//! Gate blocks are stored stacked row-wise in a single weight matrix per
//! layer — LSTM order `[input, output, forget, candidate]`, GRU order
//! `[update, reset, candidate]` — so one matrix product activates all gates
//! of a step.
//!
//! Data layout: a batch of activations is `(features, batch)`; a sequence is
//! `(time, features, batch)`.

mod backprop;
mod io;
mod optim;
mod train;

pub use backprop::{bptt_gradients, Gradients, LayerTensors};
pub use io::{load, save};
pub use optim::{adam_step, AdamConfig, AdamState};
pub use train::{train, BatchSource, InMemoryDataset, TrainConfig, TrainReport};

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, Array3, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Layer families supported by the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Dense,
    Rnn,
    Lstm,
    Gru,
}

impl LayerKind {
    /// Number of stacked gate blocks in the fused weight matrices.
    pub fn gate_blocks(self) -> usize {
        match self {
            LayerKind::Dense | LayerKind::Rnn => 1,
            LayerKind::Gru => 3,
            LayerKind::Lstm => 4,
        }
    }

    pub fn is_recurrent(self) -> bool {
        !matches!(self, LayerKind::Dense)
    }

    pub fn label(self) -> &'static str {
        match self {
            LayerKind::Dense => "dense",
            LayerKind::Rnn => "rnn",
            LayerKind::Lstm => "lstm",
            LayerKind::Gru => "gru",
        }
    }
}

/// Activation of a dense layer (recurrent kinds have fixed activations).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Identity,
}

/// Shape and kind of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub input_size: usize,
    pub output_size: usize,
    /// Only meaningful for dense layers; recurrent kinds always use
    /// tanh candidates and sigmoid gates.
    pub activation: Activation,
}

impl LayerSpec {
    pub fn dense(input_size: usize, output_size: usize, activation: Activation) -> Self {
        Self { kind: LayerKind::Dense, input_size, output_size, activation }
    }

    pub fn rnn(input_size: usize, output_size: usize) -> Self {
        Self { kind: LayerKind::Rnn, input_size, output_size, activation: Activation::Tanh }
    }

    pub fn lstm(input_size: usize, output_size: usize) -> Self {
        Self { kind: LayerKind::Lstm, input_size, output_size, activation: Activation::Tanh }
    }

    pub fn gru(input_size: usize, output_size: usize) -> Self {
        Self { kind: LayerKind::Gru, input_size, output_size, activation: Activation::Tanh }
    }

    fn validate(&self) -> Result<()> {
        if self.input_size == 0 || self.output_size == 0 {
            return Err(Error::invalid_argument(format!(
                "layer sizes must be >= 1, got {}x{}",
                self.input_size, self.output_size
            )));
        }
        if self.kind.is_recurrent() && self.activation != Activation::Tanh {
            return Err(Error::invalid_argument(
                "recurrent layers use fixed tanh/sigmoid activations",
            ));
        }
        Ok(())
    }

    /// Number of trainable parameters in this layer.
    pub fn param_count(&self) -> usize {
        let g = self.kind.gate_blocks();
        let recurrent = if self.kind.is_recurrent() {
            g * self.output_size * self.output_size
        } else {
            0
        };
        g * self.output_size * self.input_size + recurrent + g * self.output_size
    }
}

/// One layer's trainable parameters.
#[derive(Debug, Clone)]
pub struct Layer<F: Real> {
    pub spec: LayerSpec,
    /// Input weights, `(gate_blocks * output, input)`.
    pub w: Array2<F>,
    /// Recurrent weights, `(gate_blocks * output, output)`; `None` for dense.
    pub u: Option<Array2<F>>,
    /// Bias, `(gate_blocks * output)`.
    pub b: Array1<F>,
}

/// Per-layer running state while stepping through a sequence.
#[derive(Debug, Clone)]
pub struct LayerState<F: Real> {
    /// Short-term state s (equals the previous output), `(output, batch)`.
    pub hidden: Array2<F>,
    /// LSTM long-term state c, `(output, batch)`.
    pub cell: Option<Array2<F>>,
}

impl<F: Real> LayerState<F> {
    pub fn zeros(spec: &LayerSpec, batch: usize) -> Self {
        Self {
            hidden: Array2::zeros((spec.output_size, batch)),
            cell: matches!(spec.kind, LayerKind::Lstm)
                .then(|| Array2::zeros((spec.output_size, batch))),
        }
    }
}

/// Everything the backward pass needs to revisit one layer step.
#[derive(Debug)]
pub(crate) enum StepCache<F: Real> {
    Dense {
        input: Array2<F>,
        output: Array2<F>,
    },
    Rnn {
        input: Array2<F>,
        prev_hidden: Array2<F>,
        output: Array2<F>,
    },
    Lstm {
        input: Array2<F>,
        prev_hidden: Array2<F>,
        prev_cell: Array2<F>,
        /// Activated gates `[i, o, f, g]`, `(4*output, batch)`.
        gates: Array2<F>,
        cell: Array2<F>,
    },
    Gru {
        input: Array2<F>,
        prev_hidden: Array2<F>,
        /// Activated gates `[z, r, n]`, `(3*output, batch)`.
        gates: Array2<F>,
        /// `r (*) s_prev`, needed for the candidate recurrent weight grad.
        reset_prod: Array2<F>,
    },
}

fn sigmoid_inplace<F: Real>(x: &mut ndarray::ArrayViewMut2<'_, F>) {
    x.mapv_inplace(|v| v.fast_sigmoid());
}

fn tanh_inplace<F: Real>(x: &mut ndarray::ArrayViewMut2<'_, F>) {
    x.mapv_inplace(|v| v.fast_tanh());
}

impl<F: Real> Layer<F> {
    /// Fresh layer with uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)]
    /// per matrix (fan_in = that matrix's input dimension); biases zero.
    fn init(spec: LayerSpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        spec.validate()?;
        let g = spec.kind.gate_blocks();
        let rows = g * spec.output_size;
        let w = uniform_matrix(rows, spec.input_size, rng);
        let u = spec
            .kind
            .is_recurrent()
            .then(|| uniform_matrix(rows, spec.output_size, rng));
        Ok(Self { spec, w, u, b: Array1::zeros(rows) })
    }

    /// Advance one time step: consumes the input activation, updates `state`,
    /// and returns the output along with the cache for backpropagation.
    pub(crate) fn step_cached(
        &self,
        input: Array2<F>,
        state: &mut LayerState<F>,
    ) -> Result<(Array2<F>, StepCache<F>)> {
        let batch = input.ncols();
        if input.nrows() != self.spec.input_size {
            return Err(Error::ShapeMismatch {
                context: "layer step input",
                expected: format!("{} rows", self.spec.input_size),
                actual: format!("{} rows", input.nrows()),
            });
        }
        if self.spec.kind.is_recurrent() && state.hidden.ncols() != batch {
            return Err(Error::ShapeMismatch {
                context: "layer step state",
                expected: format!("batch {}", state.hidden.ncols()),
                actual: format!("batch {batch}"),
            });
        }
        let h = self.spec.output_size;
        let bias = self.b.view().insert_axis(Axis(1));

        match self.spec.kind {
            LayerKind::Dense => {
                let mut pre = self.w.dot(&input);
                pre += &bias;
                match self.spec.activation {
                    Activation::Tanh => tanh_inplace(&mut pre.view_mut()),
                    Activation::Sigmoid => sigmoid_inplace(&mut pre.view_mut()),
                    Activation::Identity => {}
                }
                let cache = StepCache::Dense { input, output: pre.clone() };
                Ok((pre, cache))
            }
            LayerKind::Rnn => {
                let u = self.u.as_ref().expect("recurrent layer has U");
                let mut pre = self.w.dot(&input);
                general_mat_mul(F::one(), u, &state.hidden, F::one(), &mut pre);
                pre += &bias;
                tanh_inplace(&mut pre.view_mut());
                let prev_hidden = std::mem::replace(&mut state.hidden, pre.clone());
                let cache = StepCache::Rnn { input, prev_hidden, output: pre.clone() };
                Ok((pre, cache))
            }
            LayerKind::Lstm => {
                let u = self.u.as_ref().expect("recurrent layer has U");
                let mut gates = self.w.dot(&input);
                general_mat_mul(F::one(), u, &state.hidden, F::one(), &mut gates);
                gates += &bias;
                sigmoid_inplace(&mut gates.slice_mut(s![..3 * h, ..]));
                tanh_inplace(&mut gates.slice_mut(s![3 * h.., ..]));

                let (i_g, rest) = gates.view().split_at(Axis(0), h);
                let (o_g, rest) = rest.split_at(Axis(0), h);
                let (f_g, g_g) = rest.split_at(Axis(0), h);

                let prev_cell = state.cell.take().expect("LSTM state has cell");
                let mut cell = Array2::zeros((h, batch));
                ndarray::azip!((c in &mut cell, &f in &f_g, &cp in &prev_cell, &i in &i_g, &g in &g_g) {
                    *c = f * cp + i * g;
                });
                let mut output = Array2::zeros((h, batch));
                ndarray::azip!((y in &mut output, &o in &o_g, &c in &cell) {
                    *y = o * c.fast_tanh();
                });

                let prev_hidden = std::mem::replace(&mut state.hidden, output.clone());
                state.cell = Some(cell.clone());
                let cache = StepCache::Lstm { input, prev_hidden, prev_cell, gates, cell };
                Ok((output, cache))
            }
            LayerKind::Gru => {
                let u = self.u.as_ref().expect("recurrent layer has U");
                let mut gates = self.w.dot(&input);
                gates += &bias;
                // update/reset see s_prev directly; the candidate sees r (*) s_prev
                general_mat_mul(
                    F::one(),
                    &u.slice(s![..2 * h, ..]),
                    &state.hidden,
                    F::one(),
                    &mut gates.slice_mut(s![..2 * h, ..]),
                );
                sigmoid_inplace(&mut gates.slice_mut(s![..2 * h, ..]));

                let mut reset_prod = Array2::zeros((h, batch));
                ndarray::azip!((rp in &mut reset_prod, &r in &gates.slice(s![h..2 * h, ..]), &sp in &state.hidden) {
                    *rp = r * sp;
                });
                general_mat_mul(
                    F::one(),
                    &u.slice(s![2 * h.., ..]),
                    &reset_prod,
                    F::one(),
                    &mut gates.slice_mut(s![2 * h.., ..]),
                );
                tanh_inplace(&mut gates.slice_mut(s![2 * h.., ..]));

                let mut output = Array2::zeros((h, batch));
                ndarray::azip!((y in &mut output, &z in &gates.slice(s![..h, ..]), &n in &gates.slice(s![2 * h.., ..]), &sp in &state.hidden) {
                    *y = (F::one() - z) * sp + z * n;
                });

                let prev_hidden = std::mem::replace(&mut state.hidden, output.clone());
                let cache = StepCache::Gru { input, prev_hidden, gates, reset_prod };
                Ok((output, cache))
            }
        }
    }

    /// One inference step (no backward cache kept).
    pub fn step(&self, input: &ArrayView2<'_, F>, state: &mut LayerState<F>) -> Result<Array2<F>> {
        let (y, _) = self.step_cached(input.to_owned(), state)?;
        Ok(y)
    }
}

fn uniform_matrix<F: Real>(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<F> {
    let bound = 1.0 / (cols as f64).sqrt();
    let data: Vec<F> = (0..rows * cols)
        .map(|_| F::from_f64_lossy((rng.random::<f64>() * 2.0 - 1.0) * bound))
        .collect();
    Array2::from_shape_vec((rows, cols), data).expect("shape matches data length")
}

/// A stack of layers with per-layer running state.
#[derive(Debug, Clone)]
pub struct RecurrentNet<F: Real> {
    layers: Vec<Layer<F>>,
    state: Option<Vec<LayerState<F>>>,
}

impl<F: Real> RecurrentNet<F> {
    /// Build a network from an ordered layer chain; weight init is seeded.
    pub fn new(specs: &[LayerSpec], seed: u64) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::invalid_argument("network needs at least one layer"));
        }
        for pair in specs.windows(2) {
            if pair[0].output_size != pair[1].input_size {
                return Err(Error::invalid_argument(format!(
                    "layer chain mismatch: {} outputs feed {} inputs",
                    pair[0].output_size, pair[1].input_size
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = specs
            .iter()
            .map(|spec| Layer::init(*spec, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers, state: None })
    }

    pub fn layers(&self) -> &[Layer<F>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<F>] {
        &mut self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn input_size(&self) -> usize {
        self.layers.first().map(|l| l.spec.input_size).unwrap_or(0)
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().map(|l| l.spec.output_size).unwrap_or(0)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.spec.param_count()).sum()
    }

    /// Drop any running sequence state; the next step starts a new sequence.
    pub fn reset_state(&mut self) {
        self.state = None;
    }

    /// Advance the whole stack one time step, threading state.
    ///
    /// A fresh zero state is created when none exists; feeding a different
    /// batch size mid-sequence is a contract violation.
    pub fn step(&mut self, input: &ArrayView2<'_, F>) -> Result<Array2<F>> {
        let batch = input.ncols();
        let layers = &self.layers;
        let state = self
            .state
            .get_or_insert_with(|| layers.iter().map(|l| LayerState::zeros(&l.spec, batch)).collect());
        let have = state.first().map(|ls| ls.hidden.ncols()).unwrap_or(batch);
        if have != batch {
            return Err(Error::ShapeMismatch {
                context: "net step batch",
                expected: format!("{have}"),
                actual: format!("{batch}"),
            });
        }
        let mut activation = input.to_owned();
        for (layer, layer_state) in self.layers.iter().zip(state.iter_mut()) {
            let (y, _) = layer.step_cached(activation, layer_state)?;
            activation = y;
        }
        Ok(activation)
    }

    /// Run a full sequence `(time, features, batch)`, resetting state first
    /// and retaining it across the steps of this sequence.
    pub fn forward(&mut self, sequence: &Array3<F>) -> Result<Array3<F>> {
        self.reset_state();
        let caches = backprop::forward_slab(self, &sequence.view())?;
        self.state = Some(caches.final_states(self));
        Ok(caches.into_top())
    }

    /// All parameters flattened in a fixed order (layer by layer: W row-major,
    /// then U row-major, then bias). The order is part of the file format.
    pub fn params_to_vec(&self) -> Vec<F> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend(layer.w.iter().copied());
            if let Some(u) = &layer.u {
                out.extend(u.iter().copied());
            }
            out.extend(layer.b.iter().copied());
        }
        out
    }

    /// Inverse of [`RecurrentNet::params_to_vec`].
    pub fn set_params_from_vec(&mut self, params: &[F]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::invalid_argument(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut it = params.iter().copied();
        for layer in &mut self.layers {
            for v in layer.w.iter_mut() {
                *v = it.next().unwrap();
            }
            if let Some(u) = &mut layer.u {
                for v in u.iter_mut() {
                    *v = it.next().unwrap();
                }
            }
            for v in layer.b.iter_mut() {
                *v = it.next().unwrap();
            }
        }
        Ok(())
    }

    /// True when every parameter is finite.
    pub fn params_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.w.iter().all(|v| v.is_finite())
                && l.u.as_ref().map_or(true, |u| u.iter().all(|v| v.is_finite()))
                && l.b.iter().all(|v| v.is_finite())
        })
    }
}
