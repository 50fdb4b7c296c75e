//! Adam with bias-corrected first and second moments.

use super::{Gradients, LayerTensors, RecurrentNet};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First/second-moment accumulators, shaped like the network parameters.
#[derive(Debug, Clone)]
pub struct AdamState<F: Real> {
    config: AdamConfig,
    first: Vec<LayerTensors<F>>,
    second: Vec<LayerTensors<F>>,
    step: u64,
}

impl<F: Real> AdamState<F> {
    pub fn new(config: AdamConfig, net: &RecurrentNet<F>) -> Self {
        let zeros = || Gradients::zeros_like(net).layers;
        Self { config, first: zeros(), second: zeros(), step: 0 }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }
}

/// One Adam update. Rejects non-finite gradients (training divergence)
/// before touching any parameter.
pub fn adam_step<F: Real>(
    net: &mut RecurrentNet<F>,
    grads: &Gradients<F>,
    state: &mut AdamState<F>,
) -> Result<()> {
    let finite = grads.layers.iter().all(|g| {
        g.w.iter().all(|v| v.is_finite())
            && g.u.as_ref().map_or(true, |u| u.iter().all(|v| v.is_finite()))
            && g.b.iter().all(|v| v.is_finite())
    });
    if !finite {
        return Err(Error::TrainingDiverged("non-finite gradient".into()));
    }
    state.step += 1;
    let cfg = state.config;
    let corr1 = 1.0 / (1.0 - cfg.beta1.powi(state.step as i32));
    let corr2 = 1.0 / (1.0 - cfg.beta2.powi(state.step as i32));
    let lr = F::from_f64_lossy(cfg.learning_rate);
    let b1 = F::from_f64_lossy(cfg.beta1);
    let b2 = F::from_f64_lossy(cfg.beta2);
    let eps = F::from_f64_lossy(cfg.epsilon);
    let c1 = F::from_f64_lossy(corr1);
    let c2 = F::from_f64_lossy(corr2);
    let one = F::one();

    for ((layer, grad), (m, v)) in net
        .layers_mut()
        .iter_mut()
        .zip(&grads.layers)
        .zip(state.first.iter_mut().zip(state.second.iter_mut()))
    {
        update_tensor(&mut layer.w, &grad.w, &mut m.w, &mut v.w, lr, b1, b2, eps, c1, c2, one);
        if let (Some(u), Some(gu), Some(mu), Some(vu)) =
            (layer.u.as_mut(), grad.u.as_ref(), m.u.as_mut(), v.u.as_mut())
        {
            update_tensor(u, gu, mu, vu, lr, b1, b2, eps, c1, c2, one);
        }
        update_tensor(&mut layer.b, &grad.b, &mut m.b, &mut v.b, lr, b1, b2, eps, c1, c2, one);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn update_tensor<F: Real, D: ndarray::Dimension>(
    param: &mut ndarray::Array<F, D>,
    grad: &ndarray::Array<F, D>,
    m: &mut ndarray::Array<F, D>,
    v: &mut ndarray::Array<F, D>,
    lr: F,
    b1: F,
    b2: F,
    eps: F,
    c1: F,
    c2: F,
    one: F,
) {
    ndarray::azip!((p in param, &g in grad, m in m, v in v) {
        *m = b1 * *m + (one - b1) * g;
        *v = b2 * *v + (one - b2) * g * g;
        let m_hat = *m * c1;
        let v_hat = *v * c2;
        *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
    });
}
