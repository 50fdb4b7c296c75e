//! Per-prediction operation counts for deployed recurrent predictors and
//! their FLOPS demand at a given prediction rate.
//!
//! Counts follow the multiply+add convention (a length-n dot product is 2n
//! operations); by default element-wise gate arithmetic and activation
//! evaluations are neglected against the matrix products. An `exact` mode
//! adds them back for sensitivity checks.

use crate::error::{Error, Result};
use crate::recurrent::LayerKind;

/// Shape of a deployed network: input width, hidden layers with their kinds,
/// output width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetShape {
    pub input_size: usize,
    pub hidden: Vec<(LayerKind, usize)>,
    pub output_size: usize,
}

impl NetShape {
    pub fn new(input_size: usize, hidden: Vec<(LayerKind, usize)>, output_size: usize) -> Result<Self> {
        if input_size == 0 || output_size == 0 || hidden.is_empty() {
            return Err(Error::invalid_argument("all sizes must be >= 1 and at least one hidden layer"));
        }
        if hidden.iter().any(|&(_, n)| n == 0) {
            return Err(Error::invalid_argument("hidden sizes must be >= 1"));
        }
        if hidden.iter().any(|&(k, _)| !k.is_recurrent()) {
            return Err(Error::invalid_argument("hidden layers must be recurrent kinds"));
        }
        Ok(Self { input_size, hidden, output_size })
    }

    /// Uniform-kind convenience constructor.
    pub fn uniform(input_size: usize, kind: LayerKind, hidden: &[usize], output_size: usize) -> Result<Self> {
        Self::new(input_size, hidden.iter().map(|&n| (kind, n)).collect(), output_size)
    }

    fn ensure_uniform(&self, kind: LayerKind) -> Result<()> {
        if self.hidden.iter().any(|&(k, _)| k != kind) {
            return Err(Error::invalid_argument(format!(
                "shape mixes layer kinds; expected all {}",
                kind.label()
            )));
        }
        Ok(())
    }

    /// `sum_l (N_h^{l-1} * N_h^l + (N_h^l)^2)` with `N_h^0 = N_i`.
    fn hidden_product_sum(&self) -> u64 {
        let mut prev = self.input_size as u64;
        let mut acc = 0u64;
        for &(_, n) in &self.hidden {
            let n = n as u64;
            acc += prev * n + n * n;
            prev = n;
        }
        acc
    }

    fn boundary_ops(&self) -> u64 {
        let first = self.hidden.first().map(|&(_, n)| n as u64).unwrap_or(0);
        let last = self.hidden.last().map(|&(_, n)| n as u64).unwrap_or(0);
        2 * (self.input_size as u64 * first + last * self.output_size as u64)
    }
}

/// Weight factor on a hidden layer's matrix products relative to simple RNN.
fn kind_factor(kind: LayerKind) -> u64 {
    match kind {
        LayerKind::Rnn => 1,
        LayerKind::Gru => 3,
        LayerKind::Lstm => 4,
        LayerKind::Dense => 1,
    }
}

/// Operations per prediction for an all-RNN network:
/// `2 [ N_i N_h^1 + N_h^L N_o + sum_l (N_h^{l-1} N_h^l + (N_h^l)^2) ]`.
pub fn ops_rnn(shape: &NetShape) -> Result<u64> {
    shape.ensure_uniform(LayerKind::Rnn)?;
    Ok(shape.boundary_ops() + 2 * shape.hidden_product_sum())
}

/// Operations per prediction for an all-LSTM network (hidden factor 4).
pub fn ops_lstm(shape: &NetShape) -> Result<u64> {
    shape.ensure_uniform(LayerKind::Lstm)?;
    Ok(shape.boundary_ops() + 2 * 4 * shape.hidden_product_sum())
}

/// Operations per prediction for an all-GRU network (hidden factor 3).
pub fn ops_gru(shape: &NetShape) -> Result<u64> {
    shape.ensure_uniform(LayerKind::Gru)?;
    Ok(shape.boundary_ops() + 2 * 3 * shape.hidden_product_sum())
}

/// Operations per prediction for a possibly mixed-kind network.
pub fn ops(shape: &NetShape) -> u64 {
    let mut prev = shape.input_size as u64;
    let mut acc = shape.boundary_ops();
    for &(kind, n) in &shape.hidden {
        let n = n as u64;
        acc += 2 * kind_factor(kind) * (prev * n + n * n);
        prev = n;
    }
    acc
}

/// Exact-count mode: keeps the `-1` terms of the dot products and adds the
/// element-wise gate arithmetic the approximation drops (7 N_h - 3 per LSTM
/// layer; 5 N_h per GRU layer for the state blend and reset product).
pub fn ops_exact(shape: &NetShape) -> u64 {
    let mut acc = 0u64;
    // input layer: N_i*N_h mults + (N_i-1)*N_h adds + N_h bias adds = 2*N_i*N_h
    let first = shape.hidden.first().map(|&(_, n)| n as u64).unwrap_or(0);
    let last = shape.hidden.last().map(|&(_, n)| n as u64).unwrap_or(0);
    acc += 2 * shape.input_size as u64 * first;
    acc += 2 * last * shape.output_size as u64;
    let mut prev = shape.input_size as u64;
    for &(kind, n) in &shape.hidden {
        let n_u = n as u64;
        // one W*x + U*s + b block: (2*prev-1)*n + (2*n-1)*n + n
        let block = (2 * prev - 1) * n_u + (2 * n_u - 1) * n_u + n_u;
        acc += kind_factor(kind) * block;
        acc += match kind {
            LayerKind::Lstm => 7 * n_u - 3,
            LayerKind::Gru => 5 * n_u,
            _ => 0,
        };
        prev = n_u;
    }
    acc
}

/// FLOPS demand of one predictor replica.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityReport {
    pub ops_per_prediction: u64,
    pub prediction_rate_hz: f64,
    pub flops: f64,
}

impl ComplexityReport {
    /// Fraction of a hardware budget this predictor consumes.
    pub fn utilization(&self, capacity_flops: f64) -> f64 {
        self.flops / capacity_flops
    }
}

/// Combine an operation count with a prediction rate `f_p`.
pub fn flops(shape: &NetShape, f_p: f64) -> Result<ComplexityReport> {
    if !(f_p > 0.0) || !f_p.is_finite() {
        return Err(Error::invalid_argument(format!(
            "prediction rate must be positive and finite, got {f_p}"
        )));
    }
    let ops_per_prediction = ops(shape);
    Ok(ComplexityReport {
        ops_per_prediction,
        prediction_rate_hz: f_p,
        flops: ops_per_prediction as f64 * f_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn shape(kind: LayerKind, input: usize, hidden: &[usize], output: usize) -> NetShape {
        NetShape::uniform(input, kind, hidden, output).unwrap()
    }

    #[test]
    fn rnn_worked_examples() {
        assert_eq!(ops_rnn(&shape(LayerKind::Rnn, 1, &[25, 25], 1)).unwrap(), 3900);
        assert_eq!(ops_rnn(&shape(LayerKind::Rnn, 1, &[1], 1)).unwrap(), 8);
    }

    #[test]
    fn lstm_worked_examples() {
        assert_eq!(ops_lstm(&shape(LayerKind::Lstm, 1, &[25, 25], 1)).unwrap(), 15_300);
        assert_eq!(ops_lstm(&shape(LayerKind::Lstm, 1, &[1], 1)).unwrap(), 20);
        assert_eq!(ops_lstm(&shape(LayerKind::Lstm, 2, &[3], 2)).unwrap(), 144);
    }

    #[test]
    fn gru_worked_examples() {
        assert_eq!(ops_gru(&shape(LayerKind::Gru, 1, &[25, 25], 1)).unwrap(), 11_500);
        assert_eq!(ops_gru(&shape(LayerKind::Gru, 1, &[1], 1)).unwrap(), 16);
    }

    #[test]
    fn kind_ordering_holds_everywhere() {
        for &(input, ref hidden, output) in
            &[(1usize, vec![25, 25], 1usize), (3, vec![4], 2), (2, vec![10, 5, 7], 1)]
        {
            let r = ops_rnn(&shape(LayerKind::Rnn, input, hidden, output)).unwrap();
            let g = ops_gru(&shape(LayerKind::Gru, input, hidden, output)).unwrap();
            let l = ops_lstm(&shape(LayerKind::Lstm, input, hidden, output)).unwrap();
            assert!(r < g && g < l, "expected rnn < gru < lstm, got {r} {g} {l}");
        }
    }

    #[test]
    fn lstm_hidden_terms_are_four_times_rnn() {
        let sh_l = shape(LayerKind::Lstm, 1, &[25, 25], 1);
        let sh_r = shape(LayerKind::Rnn, 1, &[25, 25], 1);
        let boundary = 2 * (1 * 25 + 25 * 1) as u64;
        assert_eq!(
            ops_lstm(&sh_l).unwrap() - boundary,
            4 * (ops_rnn(&sh_r).unwrap() - boundary)
        );
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let sh = shape(LayerKind::Gru, 1, &[4], 1);
        assert!(ops_rnn(&sh).is_err());
        assert!(ops_lstm(&sh).is_err());
    }

    #[test]
    fn dsp_comparison_numbers() {
        let report = flops(&shape(LayerKind::Lstm, 1, &[25, 25], 1), 1000.0).unwrap();
        assert_eq!(report.ops_per_prediction, 15_300);
        assert_abs_diff_eq!(report.flops, 15.3e6, epsilon = 1e-6);
        assert!(report.utilization(179e9) < 1e-4); // < 0.01%
        assert_abs_diff_eq!(report.utilization(2.7e9), 0.00566, epsilon = 5e-5); // ~0.57%
    }

    #[test]
    fn exact_mode_exceeds_approximation() {
        for kind in [LayerKind::Rnn, LayerKind::Gru, LayerKind::Lstm] {
            let sh = shape(kind, 1, &[25, 25], 1);
            let approx_count = ops(&sh);
            let exact = ops_exact(&sh);
            let diff = exact as f64 - approx_count as f64;
            // gate arithmetic is small but positive for gated kinds; the -1
            // terms pull the matrix counts slightly down
            assert!(
                diff.abs() / approx_count as f64 <= 0.05,
                "exact and approximate counts should agree within 5%: {exact} vs {approx_count}"
            );
        }
    }

    #[test]
    fn flops_rejects_bad_rate() {
        let sh = shape(LayerKind::Lstm, 1, &[2], 1);
        assert!(flops(&sh, 0.0).is_err());
        assert!(flops(&sh, f64::NAN).is_err());
    }
}
