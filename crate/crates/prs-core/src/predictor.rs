//! Magnitude-only channel prediction.
//!
//! A predictor is a small recurrent network between a scalar input layer and
//! a scalar tanh output layer. It consumes a window of recent envelope
//! magnitudes |h[t]| (scaled into tanh range) and emits the D-step-ahead
//! magnitude. Training data comes from one long fading trace split
//! chronologically into train and test segments so no test window overlaps
//! training material.

use std::io::{Read, Write};

use ndarray::{s, Array2, Array3};

use crate::error::{Error, Result};
use crate::fading::FadingTrace;
use crate::recurrent::{
    train, Activation, BatchSource, LayerKind, LayerSpec, RecurrentNet, TrainConfig, TrainReport,
};
use crate::scalar::Real;

/// Normalized magnitudes are clamped slightly inside the open tanh range;
/// without the clamp the extreme envelope peaks of a long Rayleigh trace
/// would exceed the output layer's reachable set.
const NORM_CLAMP: f64 = 0.999;

/// How magnitudes are scaled into the tanh-friendly range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// Derive the scale from the train split: the given quantile of the
    /// magnitude distribution is mapped to `maps_to`.
    FromTrainQuantile { quantile: f64, maps_to: f64 },
    /// Use a fixed multiplicative scale.
    Fixed(f64),
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization::FromTrainQuantile { quantile: 0.999, maps_to: 0.9 }
    }
}

/// Architecture and data-handling choices for one predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorConfig {
    /// Hidden recurrent layers as (kind, neuron count).
    pub hidden_layers: Vec<(LayerKind, usize)>,
    /// Prediction horizon D in sampling steps.
    pub horizon_steps: usize,
    /// Number of past magnitudes fed per prediction.
    pub window: usize,
    /// Chronological fraction of the trace used for training.
    pub train_fraction: f64,
    pub normalization: Normalization,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            hidden_layers: vec![(LayerKind::Lstm, 25), (LayerKind::Lstm, 25)],
            horizon_steps: 2,
            window: 16,
            train_fraction: 0.8,
            normalization: Normalization::default(),
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers.is_empty() {
            return Err(Error::invalid_argument("at least one hidden layer required"));
        }
        if self.hidden_layers.iter().any(|&(k, n)| n == 0 || !k.is_recurrent()) {
            return Err(Error::invalid_argument(
                "hidden layers must be recurrent with >= 1 neurons",
            ));
        }
        if self.horizon_steps == 0 {
            return Err(Error::invalid_argument("horizon must be >= 1 step"));
        }
        if self.window == 0 {
            return Err(Error::invalid_argument("window must be >= 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::invalid_argument("train_fraction must lie in (0, 1]"));
        }
        match self.normalization {
            Normalization::FromTrainQuantile { quantile, maps_to } => {
                if !(0.0 < quantile && quantile < 1.0) || !(0.0 < maps_to && maps_to < 1.0) {
                    return Err(Error::invalid_argument("quantile and target must lie in (0, 1)"));
                }
            }
            Normalization::Fixed(scale) => {
                if !(scale > 0.0) || !scale.is_finite() {
                    return Err(Error::invalid_argument("fixed scale must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Layer chain: scalar tanh input layer, the hidden stack, scalar tanh
    /// output layer.
    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        let mut specs = vec![LayerSpec::dense(1, 1, Activation::Tanh)];
        let mut prev = 1;
        for &(kind, n) in &self.hidden_layers {
            specs.push(LayerSpec { kind, input_size: prev, output_size: n, activation: Activation::Tanh });
            prev = n;
        }
        specs.push(LayerSpec::dense(prev, 1, Activation::Tanh));
        specs
    }
}

/// Fresh (untrained) predictor network for a configuration.
pub fn build_predictor<F: Real>(config: &PredictorConfig, seed: u64) -> Result<RecurrentNet<F>> {
    config.validate()?;
    RecurrentNet::new(&config.layer_specs(), seed)
}

/// Windowed view over a magnitude series implementing the batch interface.
pub struct WindowSet<'a, F: Real> {
    scaled: &'a [F],
    starts: &'a [usize],
    window: usize,
    horizon: usize,
}

impl<F: Real> BatchSource<F> for WindowSet<'_, F> {
    fn len(&self) -> usize {
        self.starts.len()
    }
    fn seq_len(&self) -> usize {
        self.window
    }
    fn input_size(&self) -> usize {
        1
    }
    fn output_size(&self) -> usize {
        1
    }
    fn fill(&self, items: &[usize], inputs: &mut Array3<F>, targets: &mut Array2<F>) {
        for (col, &item) in items.iter().enumerate() {
            let start = self.starts[item];
            for s in 0..self.window {
                inputs[[s, 0, col]] = self.scaled[start + s];
            }
            targets[[0, col]] = self.scaled[start + self.window - 1 + self.horizon];
        }
    }
}

/// Chronologically split windowed dataset over one trace.
#[derive(Debug, Clone)]
pub struct ChannelDataset<F: Real> {
    raw: Vec<F>,
    scaled: Vec<F>,
    pub scale: f64,
    pub window: usize,
    pub horizon: usize,
    train_starts: Vec<usize>,
    test_starts: Vec<usize>,
}

impl<F: Real> ChannelDataset<F> {
    pub fn from_trace(trace: &FadingTrace<F>, config: &PredictorConfig) -> Result<Self> {
        Self::from_magnitudes(trace.magnitudes(), config)
    }

    pub fn from_magnitudes(raw: Vec<F>, config: &PredictorConfig) -> Result<Self> {
        config.validate()?;
        let needed = config.window + config.horizon_steps + 1;
        if raw.len() < needed {
            return Err(Error::invalid_argument(format!(
                "trace of {} samples is too short for window {} + horizon {}",
                raw.len(),
                config.window,
                config.horizon_steps
            )));
        }
        let split = ((raw.len() as f64) * config.train_fraction).floor() as usize;
        let split = split.min(raw.len());
        let scale = match config.normalization {
            Normalization::Fixed(s) => s,
            Normalization::FromTrainQuantile { quantile, maps_to } => {
                let mut train_mags: Vec<f64> =
                    raw[..split].iter().map(|m| m.to_f64_lossy()).collect();
                train_mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let idx = ((train_mags.len() as f64 * quantile).ceil() as usize)
                    .clamp(1, train_mags.len())
                    - 1;
                let q = train_mags[idx];
                if !(q > 0.0) {
                    return Err(Error::invalid_argument(
                        "train split magnitudes are all zero; cannot derive a scale",
                    ));
                }
                maps_to / q
            }
        };
        let scale_f = F::from_f64_lossy(scale);
        let clamp_hi = F::from_f64_lossy(NORM_CLAMP);
        let scaled: Vec<F> = raw
            .iter()
            .map(|&m| (m * scale_f).min(clamp_hi).max(F::zero()))
            .collect();

        // Train windows live entirely (inputs and target) before the split;
        // test windows start at or after it, so every test sample index is
        // strictly greater than every train sample index.
        let span = config.window + config.horizon_steps - 1; // target = start + span
        let train_starts: Vec<usize> = if split > span {
            (0..=split - 1 - span).collect()
        } else {
            Vec::new()
        };
        let test_starts: Vec<usize> =
            if raw.len() > span { (split..raw.len() - span).collect() } else { Vec::new() };
        if train_starts.is_empty() {
            return Err(Error::invalid_argument(
                "train split too short to hold a single window",
            ));
        }
        Ok(Self {
            raw,
            scaled,
            scale,
            window: config.window,
            horizon: config.horizon_steps,
            train_starts,
            test_starts,
        })
    }

    pub fn train_set(&self) -> WindowSet<'_, F> {
        WindowSet {
            scaled: &self.scaled,
            starts: &self.train_starts,
            window: self.window,
            horizon: self.horizon,
        }
    }

    pub fn test_set(&self) -> WindowSet<'_, F> {
        WindowSet {
            scaled: &self.scaled,
            starts: &self.test_starts,
            window: self.window,
            horizon: self.horizon,
        }
    }

    pub fn train_count(&self) -> usize {
        self.train_starts.len()
    }

    pub fn test_count(&self) -> usize {
        self.test_starts.len()
    }

    pub fn test_starts(&self) -> &[usize] {
        &self.test_starts
    }

    pub fn train_starts(&self) -> &[usize] {
        &self.train_starts
    }

    /// Largest sample index touched by any train window.
    pub fn max_train_index(&self) -> usize {
        self.train_starts.last().map(|s| s + self.window - 1 + self.horizon).unwrap_or(0)
    }

    /// Smallest sample index touched by any test window.
    pub fn min_test_index(&self) -> Option<usize> {
        self.test_starts.first().copied()
    }

    pub fn raw(&self) -> &[F] {
        &self.raw
    }
}

/// Accuracy of a predictor on held-out data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionReport {
    /// Mean squared error on de-normalized magnitudes.
    pub mse: f64,
    /// Pearson correlation between predicted and actual magnitudes.
    pub correlation: f64,
    pub horizon_steps: usize,
    pub samples: usize,
}

impl PredictionReport {
    /// Structured-text rendering (JSON object).
    pub fn to_json(&self) -> String {
        format!(
            "{{\"mse\": {}, \"correlation\": {}, \"horizon\": {}, \"samples\": {}}}",
            self.mse, self.correlation, self.horizon_steps, self.samples
        )
    }
}

/// A trained network plus the bookkeeping needed to apply it: window length,
/// horizon and magnitude scale.
#[derive(Debug, Clone)]
pub struct TrainedPredictor<F: Real> {
    pub net: RecurrentNet<F>,
    pub window: usize,
    pub horizon: usize,
    pub scale: f64,
}

impl<F: Real> TrainedPredictor<F> {
    /// Predict the D-step-ahead magnitude from the most recent `window`
    /// magnitudes (oldest first). The result is de-normalized and clamped
    /// at zero.
    pub fn predict(&mut self, recent: &[F]) -> Result<F> {
        if recent.len() != self.window {
            return Err(Error::invalid_argument(format!(
                "predict expects exactly {} magnitudes, got {}",
                self.window,
                recent.len()
            )));
        }
        let out = self.predict_windows(&[recent])?;
        Ok(out[0])
    }

    /// Batched prediction over windows taken from a raw magnitude series at
    /// the given start indices (window = samples [start, start+window)).
    pub fn predict_starts(&mut self, raw: &[F], starts: &[usize]) -> Result<Vec<F>> {
        let windows: Vec<&[F]> = starts
            .iter()
            .map(|&s| {
                raw.get(s..s + self.window).ok_or_else(|| {
                    Error::invalid_argument(format!(
                        "window at {s} exceeds series of length {}",
                        raw.len()
                    ))
                })
            })
            .collect::<Result<_>>()?;
        self.predict_windows(&windows)
    }

    fn predict_windows(&mut self, windows: &[&[F]]) -> Result<Vec<F>> {
        if !self.net.params_finite() {
            return Err(Error::InvalidState("predictor weights are not finite".into()));
        }
        let scale = F::from_f64_lossy(self.scale);
        let clamp_hi = F::from_f64_lossy(NORM_CLAMP);
        let mut out = Vec::with_capacity(windows.len());
        const CHUNK: usize = 1024;
        for chunk in windows.chunks(CHUNK) {
            let b = chunk.len();
            let mut seq = Array3::zeros((self.window, 1, b));
            for (col, win) in chunk.iter().enumerate() {
                for (s, &m) in win.iter().enumerate() {
                    seq[[s, 0, col]] = (m * scale).min(clamp_hi).max(F::zero());
                }
            }
            let y = self.net.forward(&seq)?;
            let last = y.slice(s![self.window - 1, 0, ..]);
            out.extend(last.iter().map(|&v| (v / scale).max(F::zero())));
        }
        Ok(out)
    }

    /// Evaluate on the held-out split of a dataset: MSE on de-normalized
    /// magnitudes and Pearson correlation between prediction and truth.
    pub fn evaluate(&mut self, dataset: &ChannelDataset<F>) -> Result<PredictionReport> {
        if dataset.test_count() == 0 {
            return Err(Error::invalid_argument("empty test set"));
        }
        let predicted = self.predict_starts(&dataset.raw, dataset.test_starts())?;
        let actual: Vec<F> = dataset
            .test_starts()
            .iter()
            .map(|&start| dataset.raw[start + self.window - 1 + self.horizon])
            .collect();
        let mse = predicted
            .iter()
            .zip(&actual)
            .map(|(&p, &a)| {
                let e = p.to_f64_lossy() - a.to_f64_lossy();
                e * e
            })
            .sum::<f64>()
            / predicted.len() as f64;
        let predicted64: Vec<f64> = predicted.iter().map(|v| v.to_f64_lossy()).collect();
        let actual64: Vec<f64> = actual.iter().map(|v| v.to_f64_lossy()).collect();
        Ok(PredictionReport {
            mse,
            correlation: pearson(&predicted64, &actual64),
            horizon_steps: self.horizon,
            samples: predicted.len(),
        })
    }

    /// Serialize as a model file (predictor header + engine weight blob).
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(b"PRSP")?;
        out.write_all(&1u32.to_le_bytes())?;
        out.write_all(&(self.window as u32).to_le_bytes())?;
        out.write_all(&(self.horizon as u32).to_le_bytes())?;
        out.write_all(&self.scale.to_le_bytes())?;
        crate::recurrent::save(&self.net, out)
    }

    pub fn load<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != b"PRSP" {
            return Err(Error::invalid_argument("not a predictor model file"));
        }
        let mut u32b = [0u8; 4];
        input.read_exact(&mut u32b)?;
        if u32::from_le_bytes(u32b) != 1 {
            return Err(Error::invalid_argument("unsupported predictor file version"));
        }
        input.read_exact(&mut u32b)?;
        let window = u32::from_le_bytes(u32b) as usize;
        input.read_exact(&mut u32b)?;
        let horizon = u32::from_le_bytes(u32b) as usize;
        let mut f64b = [0u8; 8];
        input.read_exact(&mut f64b)?;
        let scale = f64::from_le_bytes(f64b);
        let net = crate::recurrent::load(input)?;
        Ok(Self { net, window, horizon, scale })
    }
}

/// Build and train a predictor on the train split of `dataset`.
pub fn train_predictor<F: Real>(
    config: &PredictorConfig,
    dataset: &ChannelDataset<F>,
    train_config: &TrainConfig,
    init_seed: u64,
) -> Result<(TrainedPredictor<F>, TrainReport)> {
    if dataset.window != config.window || dataset.horizon != config.horizon_steps {
        return Err(Error::Config(
            "dataset window/horizon disagree with predictor configuration".into(),
        ));
    }
    let mut net = build_predictor(config, init_seed)?;
    let report = train(&mut net, &dataset.train_set(), train_config)?;
    Ok((
        TrainedPredictor {
            net,
            window: config.window,
            horizon: config.horizon_steps,
            scale: dataset.scale,
        },
        report,
    ))
}

/// Pearson correlation coefficient; NaN when either series is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    cov / (var_a * var_b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::{FadingParams, FadingTrace};
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    fn lstm2_config() -> PredictorConfig {
        PredictorConfig::default()
    }

    #[test]
    fn build_shapes_match_architecture() {
        let net: RecurrentNet<f64> = build_predictor(&lstm2_config(), 0).unwrap();
        let specs = net.specs();
        assert_eq!(specs.len(), 4);
        assert_eq!((specs[0].input_size, specs[0].output_size), (1, 1));
        assert_eq!(specs[1].kind, LayerKind::Lstm);
        assert_eq!((specs[1].input_size, specs[1].output_size), (1, 25));
        assert_eq!((specs[2].input_size, specs[2].output_size), (25, 25));
        assert_eq!((specs[3].input_size, specs[3].output_size), (25, 1));
    }

    #[test]
    fn minimal_rnn_predictor_outputs_in_tanh_range() {
        let config = PredictorConfig {
            hidden_layers: vec![(LayerKind::Rnn, 1)],
            ..PredictorConfig::default()
        };
        let mut net: RecurrentNet<f64> = build_predictor(&config, 3).unwrap();
        let seq = Array3::from_shape_fn((16, 1, 1), |(t, _, _)| 0.1 * t as f64);
        let out = net.forward(&seq).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn gru_hidden_params_are_three_times_rnn() {
        let gru = PredictorConfig {
            hidden_layers: vec![(LayerKind::Gru, 30), (LayerKind::Gru, 30)],
            ..PredictorConfig::default()
        };
        let rnn = PredictorConfig {
            hidden_layers: vec![(LayerKind::Rnn, 30), (LayerKind::Rnn, 30)],
            ..PredictorConfig::default()
        };
        let hidden_params = |cfg: &PredictorConfig| -> usize {
            cfg.layer_specs()[1..cfg.layer_specs().len() - 1]
                .iter()
                .map(|spec| spec.param_count())
                .sum()
        };
        assert_eq!(hidden_params(&gru), 3 * hidden_params(&rnn));
    }

    #[test]
    fn dataset_index_arithmetic() {
        // horizon 2, window 3, indices 0..9: first window [0,1,2] -> target 4,
        // last usable start 5 -> target 9.
        let config = PredictorConfig {
            hidden_layers: vec![(LayerKind::Rnn, 1)],
            horizon_steps: 2,
            window: 3,
            train_fraction: 1.0,
            normalization: Normalization::Fixed(1.0),
        };
        let mags: Vec<f64> = (0..10).map(|i| 0.1 + i as f64 * 0.05).collect();
        let ds = ChannelDataset::from_magnitudes(mags, &config).unwrap();
        assert_eq!(ds.train_starts(), (0..=5).collect::<Vec<_>>().as_slice());
        assert_eq!(ds.test_count(), 0);
        let set = ds.train_set();
        let mut inputs = Array3::zeros((3, 1, 1));
        let mut targets = ndarray::Array2::zeros((1, 1));
        set.fill(&[0], &mut inputs, &mut targets);
        assert_abs_diff_eq!(inputs[[0, 0, 0]], 0.10, epsilon = 1e-12);
        assert_abs_diff_eq!(inputs[[2, 0, 0]], 0.20, epsilon = 1e-12);
        assert_abs_diff_eq!(targets[[0, 0]], 0.30, epsilon = 1e-12); // index 4
    }

    #[test]
    fn dataset_rejects_short_traces() {
        let config = lstm2_config();
        let mags = vec![0.5f64; 10];
        assert!(ChannelDataset::from_magnitudes(mags, &config).is_err());
    }

    #[test]
    fn chronological_split_has_no_leakage() {
        let params = FadingParams::new(100.0, 1000.0, 1.0, 5_000).unwrap();
        let trace: FadingTrace<f64> = FadingTrace::generate(params, 3).unwrap();
        let ds = ChannelDataset::from_trace(&trace, &lstm2_config()).unwrap();
        assert!(ds.train_count() > 0 && ds.test_count() > 0);
        assert!(ds.max_train_index() < ds.min_test_index().unwrap());
    }

    #[test]
    fn quantile_scale_keeps_train_targets_below_one() {
        let params = FadingParams::new(100.0, 1000.0, 1.0, 100_000).unwrap();
        let trace: FadingTrace<f64> = FadingTrace::generate(params, 8).unwrap();
        let ds = ChannelDataset::from_trace(&trace, &lstm2_config()).unwrap();
        // 99.9th percentile of a unit-power Rayleigh envelope is ~2.628
        let q = 0.9 / ds.scale;
        assert_abs_diff_eq!(q, 2.628, epsilon = 0.1);
        let set = ds.train_set();
        let mut inputs = Array3::zeros((ds.window, 1, 1));
        let mut targets = ndarray::Array2::zeros((1, 1));
        for item in 0..set.len() {
            set.fill(&[item], &mut inputs, &mut targets);
            assert!(targets[[0, 0]] < 1.0);
        }
    }

    #[test]
    fn constant_channel_is_learned_to_one_percent() {
        let params = FadingParams::new(0.0, 1000.0, 1.0, 3_000).unwrap();
        let trace: FadingTrace<f64> = FadingTrace::generate(params, 5).unwrap();
        let constant = trace.magnitudes()[0];
        let config = PredictorConfig {
            hidden_layers: vec![(LayerKind::Lstm, 4)],
            horizon_steps: 1,
            window: 8,
            ..PredictorConfig::default()
        };
        let ds = ChannelDataset::from_trace(&trace, &config).unwrap();
        let train_config = TrainConfig { batch_size: 64, epochs: 20, ..TrainConfig::default() };
        let (mut predictor, _) = train_predictor(&config, &ds, &train_config, 11).unwrap();
        let window = vec![constant; 8];
        let got = predictor.predict(&window).unwrap();
        assert!(
            (got - constant).abs() / constant < 0.01,
            "predicted {got} for constant {constant}"
        );
    }

    #[test]
    fn predict_validates_window_and_state() {
        let config = lstm2_config();
        let net: RecurrentNet<f64> = build_predictor(&config, 0).unwrap();
        let mut predictor = TrainedPredictor { net, window: 16, horizon: 2, scale: 1.0 };
        assert!(predictor.predict(&[0.1; 5]).is_err());
        // zero-magnitude window after zero training: output clamped >= 0
        let out = predictor.predict(&[0.0; 16]).unwrap();
        assert!(out >= 0.0);
        // poison the weights: invalid state
        let n = predictor.net.param_count();
        predictor.net.set_params_from_vec(&vec![f64::NAN; n]).unwrap();
        assert!(matches!(predictor.predict(&[0.1; 16]), Err(Error::InvalidState(_))));
    }

    #[test]
    fn evaluate_perfect_and_shuffled() {
        let a: Vec<f64> = (0..100_000).map(|i| ((i as f64) * 0.37).sin().abs()).collect();
        assert_abs_diff_eq!(pearson(&a, &a), 1.0, epsilon = 1e-12);
        let mut shuffled = a.clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut rng);
        assert!(pearson(&a, &shuffled).abs() < 0.05);
    }

    #[test]
    fn evaluate_rejects_empty_test_set() {
        let config = PredictorConfig {
            hidden_layers: vec![(LayerKind::Rnn, 1)],
            train_fraction: 1.0,
            window: 4,
            horizon_steps: 1,
            normalization: Normalization::Fixed(1.0),
        };
        let ds = ChannelDataset::from_magnitudes(vec![0.3f64; 50], &config).unwrap();
        let net = build_predictor(&config, 0).unwrap();
        let mut predictor = TrainedPredictor { net, window: 4, horizon: 1, scale: 1.0 };
        assert!(predictor.evaluate(&ds).is_err());
    }

    #[test]
    fn model_files_round_trip() {
        let config = PredictorConfig {
            hidden_layers: vec![(LayerKind::Gru, 3)],
            ..PredictorConfig::default()
        };
        let net: RecurrentNet<f64> = build_predictor(&config, 77).unwrap();
        let predictor = TrainedPredictor { net, window: 16, horizon: 2, scale: 0.34 };
        let mut buf = Vec::new();
        predictor.save(&mut buf).unwrap();
        let loaded = TrainedPredictor::<f64>::load(buf.as_slice()).unwrap();
        assert_eq!(loaded.window, 16);
        assert_eq!(loaded.horizon, 2);
        assert_eq!(loaded.scale, 0.34);
        assert_eq!(loaded.net.params_to_vec(), predictor.net.params_to_vec());
    }

    #[test]
    fn report_json_fields() {
        let report =
            PredictionReport { mse: 0.01, correlation: 0.97, horizon_steps: 2, samples: 10 };
        let json = report.to_json();
        assert!(json.contains("\"mse\": 0.01"));
        assert!(json.contains("\"correlation\": 0.97"));
        assert!(json.contains("\"horizon\": 2"));
    }

    #[test]
    fn random_destroys_correlation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let a: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        assert!(pearson(&a, &b).abs() < 0.05);
    }
}
