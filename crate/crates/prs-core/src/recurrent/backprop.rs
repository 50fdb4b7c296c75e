//! Truncated backpropagation through time.
//!
//! A batch of B windows of T steps is processed as time-major slabs
//! `(T, rows, B)`: the per-step block is contiguous, so the gate algebra
//! runs as fused single-pass slice loops and every matrix product sees a
//! contiguous operand. Only the recurrent products and the gate algebra are
//! sequential in t.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, Array3, ArrayView2, ArrayView3, Axis};

use super::{Activation, Layer, LayerKind, RecurrentNet};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Same-shaped companion of one [`Layer`]'s parameters.
#[derive(Debug, Clone)]
pub struct LayerTensors<F: Real> {
    pub w: Array2<F>,
    pub u: Option<Array2<F>>,
    pub b: Array1<F>,
}

impl<F: Real> LayerTensors<F> {
    fn zeros_like(layer: &Layer<F>) -> Self {
        Self {
            w: Array2::zeros(layer.w.dim()),
            u: layer.u.as_ref().map(|u| Array2::zeros(u.dim())),
            b: Array1::zeros(layer.b.dim()),
        }
    }
}

/// Gradient of the loss with respect to every network parameter.
#[derive(Debug, Clone)]
pub struct Gradients<F: Real> {
    pub layers: Vec<LayerTensors<F>>,
}

impl<F: Real> Gradients<F> {
    pub fn zeros_like(net: &RecurrentNet<F>) -> Self {
        Self { layers: net.layers().iter().map(LayerTensors::zeros_like).collect() }
    }

    /// Flattened in the same order as [`RecurrentNet::params_to_vec`].
    pub fn to_vec(&self) -> Vec<F> {
        let mut out = Vec::new();
        for lt in &self.layers {
            out.extend(lt.w.iter().copied());
            if let Some(u) = &lt.u {
                out.extend(u.iter().copied());
            }
            out.extend(lt.b.iter().copied());
        }
        out
    }
}

/// Forward records for one layer over a whole window batch.
pub(crate) struct LayerSlab<F: Real> {
    /// Activated gate blocks, `(T, gates*h, B)`.
    gates: Array3<F>,
    /// Layer outputs (the short-term state), `(T, h, B)`.
    out: Array3<F>,
    /// LSTM cell states.
    cell: Option<Array3<F>>,
    /// tanh of the cell states, cached for the backward pass.
    tanh_cell: Option<Array3<F>>,
    /// GRU `r (*) s_prev` products.
    reset_prod: Option<Array3<F>>,
}

pub(crate) struct SlabCaches<F: Real> {
    steps: usize,
    batch: usize,
    /// Input sequence, `(T, input, B)`.
    seq: Array3<F>,
    layers: Vec<LayerSlab<F>>,
}

impl<F: Real> SlabCaches<F> {
    /// Top-layer outputs, `(T, out, B)`.
    pub(crate) fn top(&self) -> &Array3<F> {
        &self.layers.last().expect("net has layers").out
    }

    pub(crate) fn into_top(mut self) -> Array3<F> {
        self.layers.pop().expect("net has layers").out
    }

    /// Per-layer state after the last step (for continued stepping).
    pub(crate) fn final_states(&self, net: &RecurrentNet<F>) -> Vec<super::LayerState<F>> {
        let t_last = self.steps - 1;
        net.layers()
            .iter()
            .zip(&self.layers)
            .map(|(layer, slab)| {
                let mut state = super::LayerState::zeros(&layer.spec, self.batch);
                if layer.spec.kind.is_recurrent() {
                    state.hidden.assign(&slab.out.index_axis(Axis(0), t_last));
                    if let (Some(cell_state), Some(cell)) = (state.cell.as_mut(), slab.cell.as_ref())
                    {
                        cell_state.assign(&cell.index_axis(Axis(0), t_last));
                    }
                }
                state
            })
            .collect()
    }
}

fn contiguous<'a, F: Real>(view: &'a ArrayView2<'_, F>) -> &'a [F] {
    view.to_slice().expect("time-major slab blocks are contiguous")
}

/// Forward over a window batch, keeping everything backward needs.
pub(crate) fn forward_slab<F: Real>(
    net: &RecurrentNet<F>,
    inputs: &ArrayView3<'_, F>,
) -> Result<SlabCaches<F>> {
    let (steps, features, batch) = inputs.dim();
    if steps == 0 || batch == 0 {
        return Err(Error::invalid_argument("empty input sequence"));
    }
    if features != net.input_size() {
        return Err(Error::ShapeMismatch {
            context: "sequence input",
            expected: format!("{} features", net.input_size()),
            actual: format!("{features} features"),
        });
    }
    let seq = inputs.to_owned();
    let mut layers: Vec<LayerSlab<F>> = Vec::with_capacity(net.layers().len());
    for (l, layer) in net.layers().iter().enumerate() {
        let x_all = if l == 0 { &seq } else { &layers[l - 1].out };
        layers.push(layer_forward(layer, x_all, steps, batch));
    }
    Ok(SlabCaches { steps, batch, seq, layers })
}

/// `gates[t] = W x[t] + b` for every step.
fn input_products<F: Real>(layer: &Layer<F>, x_all: &Array3<F>, steps: usize, batch: usize) -> Array3<F> {
    let rows = layer.spec.kind.gate_blocks() * layer.spec.output_size;
    let mut gates = Array3::zeros((steps, rows, batch));
    for t in 0..steps {
        let x_t = x_all.index_axis(Axis(0), t);
        let mut g_t = gates.index_axis_mut(Axis(0), t);
        general_mat_mul(F::one(), &layer.w, &x_t, F::zero(), &mut g_t);
        let bias = layer.b.view().insert_axis(Axis(1));
        g_t += &bias;
    }
    gates
}

fn layer_forward<F: Real>(
    layer: &Layer<F>,
    x_all: &Array3<F>,
    steps: usize,
    batch: usize,
) -> LayerSlab<F> {
    let h = layer.spec.output_size;
    let hb = h * batch;
    let one = F::one();
    let mut gates = input_products(layer, x_all, steps, batch);

    match layer.spec.kind {
        LayerKind::Dense => {
            match layer.spec.activation {
                Activation::Tanh => gates.mapv_inplace(|v| v.fast_tanh()),
                Activation::Sigmoid => gates.mapv_inplace(|v| v.fast_sigmoid()),
                Activation::Identity => {}
            }
            LayerSlab { out: gates.clone(), gates, cell: None, tanh_cell: None, reset_prod: None }
        }
        LayerKind::Rnn => {
            let u = layer.u.as_ref().unwrap();
            let mut out = Array3::zeros((steps, h, batch));
            for t in 0..steps {
                let mut g_t = gates.index_axis_mut(Axis(0), t);
                if t > 0 {
                    let s_prev = out.index_axis(Axis(0), t - 1).to_owned();
                    general_mat_mul(one, u, &s_prev, one, &mut g_t);
                }
                g_t.mapv_inplace(|v| v.fast_tanh());
                out.index_axis_mut(Axis(0), t).assign(&g_t);
            }
            LayerSlab { gates, out, cell: None, tanh_cell: None, reset_prod: None }
        }
        LayerKind::Lstm => {
            let u = layer.u.as_ref().unwrap();
            let mut out = Array3::zeros((steps, h, batch));
            let mut cell = Array3::<F>::zeros((steps, h, batch));
            let mut tanh_cell = Array3::zeros((steps, h, batch));
            let zeros = vec![F::zero(); hb];
            for t in 0..steps {
                let mut g_t = gates.index_axis_mut(Axis(0), t);
                if t > 0 {
                    let s_prev = out.index_axis(Axis(0), t - 1);
                    general_mat_mul(one, u, &s_prev.to_owned(), one, &mut g_t);
                }
                let g_slice = g_t.as_slice_mut().expect("contiguous");
                let (sig_part, gg) = g_slice.split_at_mut(3 * hb);
                for v in sig_part.iter_mut() {
                    *v = v.fast_sigmoid();
                }
                for v in gg.iter_mut() {
                    *v = v.fast_tanh();
                }
                let (ig, rest) = sig_part.split_at(hb);
                let (og, fg) = rest.split_at(hb);
                let c_prev_owned;
                let c_prev: &[F] = if t > 0 {
                    c_prev_owned = cell.index_axis(Axis(0), t - 1).to_owned();
                    c_prev_owned.as_slice().unwrap()
                } else {
                    &zeros
                };
                let mut c_t = cell.index_axis_mut(Axis(0), t);
                let c = c_t.as_slice_mut().unwrap();
                let mut tc_t = tanh_cell.index_axis_mut(Axis(0), t);
                let tc = tc_t.as_slice_mut().unwrap();
                let mut out_t = out.index_axis_mut(Axis(0), t);
                let y = out_t.as_slice_mut().unwrap();
                let (ig, og, fg, gg) = (&ig[..hb], &og[..hb], &fg[..hb], &gg[..hb]);
                let (c_prev, c, tc, y) =
                    (&c_prev[..hb], &mut c[..hb], &mut tc[..hb], &mut y[..hb]);
                for j in 0..hb {
                    let cv = fg[j] * c_prev[j] + ig[j] * gg[j];
                    let tcv = cv.fast_tanh();
                    c[j] = cv;
                    tc[j] = tcv;
                    y[j] = og[j] * tcv;
                }
            }
            LayerSlab { gates, out, cell: Some(cell), tanh_cell: Some(tanh_cell), reset_prod: None }
        }
        LayerKind::Gru => {
            let u = layer.u.as_ref().unwrap();
            let mut out = Array3::zeros((steps, h, batch));
            let mut reset_prod = Array3::zeros((steps, h, batch));
            let zeros = vec![F::zero(); hb];
            for t in 0..steps {
                let s_prev_owned;
                let s_prev: &[F] = if t > 0 {
                    s_prev_owned = out.index_axis(Axis(0), t - 1).to_owned();
                    s_prev_owned.as_slice().unwrap()
                } else {
                    &zeros
                };
                let mut g_t = gates.index_axis_mut(Axis(0), t);
                if t > 0 {
                    general_mat_mul(
                        one,
                        &u.slice(s![..2 * h, ..]),
                        &s_prev_owned_view(s_prev, h, batch),
                        one,
                        &mut g_t.slice_mut(s![..2 * h, ..]),
                    );
                }
                {
                    let g_slice = g_t.as_slice_mut().expect("contiguous");
                    let (zr, _ng) = g_slice.split_at_mut(2 * hb);
                    for v in zr.iter_mut() {
                        *v = v.fast_sigmoid();
                    }
                    let rg = &zr[hb..2 * hb];
                    let mut rp_t = reset_prod.index_axis_mut(Axis(0), t);
                    let rp = rp_t.as_slice_mut().unwrap();
                    let (rp, s_prev) = (&mut rp[..hb], &s_prev[..hb]);
                    for j in 0..hb {
                        rp[j] = rg[j] * s_prev[j];
                    }
                }
                if t > 0 {
                    let rp_t = reset_prod.index_axis(Axis(0), t).to_owned();
                    general_mat_mul(
                        one,
                        &u.slice(s![2 * h.., ..]),
                        &rp_t,
                        one,
                        &mut g_t.slice_mut(s![2 * h.., ..]),
                    );
                }
                let g_slice = g_t.as_slice_mut().expect("contiguous");
                let (zg, rest) = g_slice.split_at_mut(hb);
                let (_rg, ng) = rest.split_at_mut(hb);
                for v in ng.iter_mut() {
                    *v = v.fast_tanh();
                }
                let mut out_t = out.index_axis_mut(Axis(0), t);
                let y = out_t.as_slice_mut().unwrap();
                let (y, zg, ng, s_prev) = (&mut y[..hb], &zg[..hb], &ng[..hb], &s_prev[..hb]);
                for j in 0..hb {
                    y[j] = (one - zg[j]) * s_prev[j] + zg[j] * ng[j];
                }
            }
            LayerSlab { gates, out, cell: None, tanh_cell: None, reset_prod: Some(reset_prod) }
        }
    }
}

/// Reinterpret a contiguous `(h, batch)` slice as a 2D view for matmul.
fn s_prev_owned_view<F: Real>(data: &[F], h: usize, batch: usize) -> ArrayView2<'_, F> {
    ArrayView2::from_shape((h, batch), data).expect("shape matches")
}

/// Backward over a window batch. `d_top` is dLoss/d(top outputs),
/// `(T, out, B)`, consumed in place.
pub(crate) fn backward_slab<F: Real>(
    net: &RecurrentNet<F>,
    caches: &SlabCaches<F>,
    mut d_top: Array3<F>,
) -> Gradients<F> {
    let mut grads = Gradients::zeros_like(net);
    for l in (0..net.layers().len()).rev() {
        let x_all = if l == 0 { &caches.seq } else { &caches.layers[l - 1].out };
        d_top = layer_backward(
            &net.layers()[l],
            &caches.layers[l],
            x_all,
            d_top,
            caches.steps,
            caches.batch,
            &mut grads.layers[l],
        );
    }
    grads
}

fn layer_backward<F: Real>(
    layer: &Layer<F>,
    slab: &LayerSlab<F>,
    x_all: &Array3<F>,
    mut d_out: Array3<F>,
    steps: usize,
    batch: usize,
    grad: &mut LayerTensors<F>,
) -> Array3<F> {
    let h = layer.spec.output_size;
    let hb = h * batch;
    let one = F::one();
    let zero = F::zero();
    let zeros = vec![F::zero(); hb];

    let d_pre: Array3<F> = match layer.spec.kind {
        LayerKind::Dense => {
            match layer.spec.activation {
                Activation::Tanh => {
                    ndarray::azip!((d in &mut d_out, &y in &slab.out) *d = *d * (one - y * y));
                }
                Activation::Sigmoid => {
                    ndarray::azip!((d in &mut d_out, &y in &slab.out) *d = *d * y * (one - y));
                }
                Activation::Identity => {}
            }
            d_out
        }
        LayerKind::Rnn => {
            let u = layer.u.as_ref().unwrap();
            let mut d_pre = Array3::zeros((steps, h, batch));
            let mut carry = Array2::<F>::zeros((h, batch));
            for t in (0..steps).rev() {
                let d_out_t = d_out.index_axis(Axis(0), t);
                let d_o = contiguous(&d_out_t);
                let y_t = slab.out.index_axis(Axis(0), t);
                let y = contiguous(&y_t);
                let c = carry.as_slice().unwrap();
                {
                    let mut dp_t = d_pre.index_axis_mut(Axis(0), t);
                    let dp = dp_t.as_slice_mut().unwrap();
                    let (dp, d_o, c, y) = (&mut dp[..hb], &d_o[..hb], &c[..hb], &y[..hb]);
                    for j in 0..hb {
                        dp[j] = (d_o[j] + c[j]) * (one - y[j] * y[j]);
                    }
                }
                if t > 0 {
                    let dp_t = d_pre.index_axis(Axis(0), t);
                    general_mat_mul(one, &u.t(), &dp_t, zero, &mut carry);
                }
            }
            d_pre
        }
        LayerKind::Lstm => {
            let u = layer.u.as_ref().unwrap();
            let cell = slab.cell.as_ref().unwrap();
            let tanh_cell = slab.tanh_cell.as_ref().unwrap();
            let mut d_pre = Array3::zeros((steps, 4 * h, batch));
            let mut carry_h = Array2::<F>::zeros((h, batch));
            let mut carry_c = vec![F::zero(); hb];
            for t in (0..steps).rev() {
                let d_out_t = d_out.index_axis(Axis(0), t);
                let d_o = contiguous(&d_out_t);
                let gates_t = slab.gates.index_axis(Axis(0), t);
                let g_all = contiguous(&gates_t);
                let (ig, rest) = g_all.split_at(hb);
                let (og, rest) = rest.split_at(hb);
                let (fg, gg) = rest.split_at(hb);
                let tc_t = tanh_cell.index_axis(Axis(0), t);
                let tc = contiguous(&tc_t);
                let cp_view;
                let c_prev: &[F] = if t > 0 {
                    cp_view = cell.index_axis(Axis(0), t - 1);
                    contiguous(&cp_view)
                } else {
                    &zeros
                };
                let ch = carry_h.as_slice().unwrap();
                {
                    let mut dp_t = d_pre.index_axis_mut(Axis(0), t);
                    let dp = dp_t.as_slice_mut().unwrap();
                    let (dp_i, rest) = dp.split_at_mut(hb);
                    let (dp_o, rest) = rest.split_at_mut(hb);
                    let (dp_f, dp_g) = rest.split_at_mut(hb);
                    let (dp_i, dp_o, dp_f, dp_g) =
                        (&mut dp_i[..hb], &mut dp_o[..hb], &mut dp_f[..hb], &mut dp_g[..hb]);
                    let (d_o, ch, tc, cc) = (&d_o[..hb], &ch[..hb], &tc[..hb], &mut carry_c[..hb]);
                    let (ig, og, fg, gg, c_prev) =
                        (&ig[..hb], &og[..hb], &fg[..hb], &gg[..hb], &c_prev[..hb]);
                    for j in 0..hb {
                        let ds = d_o[j] + ch[j];
                        let tcv = tc[j];
                        let dc = ds * og[j] * (one - tcv * tcv) + cc[j];
                        dp_o[j] = ds * tcv * og[j] * (one - og[j]);
                        dp_f[j] = dc * c_prev[j] * fg[j] * (one - fg[j]);
                        dp_i[j] = dc * gg[j] * ig[j] * (one - ig[j]);
                        dp_g[j] = dc * ig[j] * (one - gg[j] * gg[j]);
                        cc[j] = dc * fg[j];
                    }
                }
                if t > 0 {
                    let dp_t = d_pre.index_axis(Axis(0), t);
                    general_mat_mul(one, &u.t(), &dp_t, zero, &mut carry_h);
                }
            }
            d_pre
        }
        LayerKind::Gru => {
            let u = layer.u.as_ref().unwrap();
            let mut d_pre = Array3::zeros((steps, 3 * h, batch));
            let mut carry = Array2::<F>::zeros((h, batch));
            let mut d_state = vec![F::zero(); hb];
            let mut d_reset_prod = Array2::<F>::zeros((h, batch));
            for t in (0..steps).rev() {
                let d_out_t = d_out.index_axis(Axis(0), t);
                let d_o = contiguous(&d_out_t);
                let gates_t = slab.gates.index_axis(Axis(0), t);
                let g_all = contiguous(&gates_t);
                let (zg, rest) = g_all.split_at(hb);
                let (rg, ng) = rest.split_at(hb);
                let sp_view;
                let s_prev: &[F] = if t > 0 {
                    sp_view = slab.out.index_axis(Axis(0), t - 1);
                    contiguous(&sp_view)
                } else {
                    &zeros
                };
                {
                    let c = carry.as_slice().unwrap();
                    let mut dp_t = d_pre.index_axis_mut(Axis(0), t);
                    let dp = dp_t.as_slice_mut().unwrap();
                    let (dp_z, rest) = dp.split_at_mut(hb);
                    let (_dp_r, dp_n) = rest.split_at_mut(hb);
                    let (dp_z, dp_n, ds_buf) = (&mut dp_z[..hb], &mut dp_n[..hb], &mut d_state[..hb]);
                    let (d_o, c, zg, ng, s_prev) =
                        (&d_o[..hb], &c[..hb], &zg[..hb], &ng[..hb], &s_prev[..hb]);
                    for j in 0..hb {
                        let ds = d_o[j] + c[j];
                        ds_buf[j] = ds;
                        dp_z[j] = ds * (ng[j] - s_prev[j]) * zg[j] * (one - zg[j]);
                        dp_n[j] = ds * zg[j] * (one - ng[j] * ng[j]);
                    }
                }
                {
                    let dp_n_view = d_pre.slice(s![t, 2 * h.., ..]);
                    general_mat_mul(one, &u.slice(s![2 * h.., ..]).t(), &dp_n_view, zero, &mut d_reset_prod);
                }
                {
                    let drp = d_reset_prod.as_slice().unwrap();
                    let mut dp_t = d_pre.index_axis_mut(Axis(0), t);
                    let dp = dp_t.as_slice_mut().unwrap();
                    let (_dp_z, rest) = dp.split_at_mut(hb);
                    let (dp_r, _dp_n) = rest.split_at_mut(hb);
                    let c = carry.as_slice_mut().unwrap();
                    let (dp_r, c, drp) = (&mut dp_r[..hb], &mut c[..hb], &drp[..hb]);
                    let (zg, rg, s_prev, ds_buf) = (&zg[..hb], &rg[..hb], &s_prev[..hb], &d_state[..hb]);
                    for j in 0..hb {
                        dp_r[j] = drp[j] * s_prev[j] * rg[j] * (one - rg[j]);
                        c[j] = ds_buf[j] * (one - zg[j]) + drp[j] * rg[j];
                    }
                }
                if t > 0 {
                    let dp_zr = d_pre.slice(s![t, ..2 * h, ..]);
                    general_mat_mul(one, &u.slice(s![..2 * h, ..]).t(), &dp_zr, one, &mut carry);
                }
            }
            d_pre
        }
    };

    // Batched weight, bias and input gradients.
    let mut d_x = Array3::zeros(x_all.dim());
    for t in 0..steps {
        let dp_t = d_pre.index_axis(Axis(0), t);
        let x_t = x_all.index_axis(Axis(0), t);
        general_mat_mul(one, &dp_t, &x_t.t(), one, &mut grad.w);
        grad.b += &dp_t.sum_axis(Axis(1));
        let mut dx_t = d_x.index_axis_mut(Axis(0), t);
        general_mat_mul(one, &layer.w.t(), &dp_t, zero, &mut dx_t);
        if let Some(du) = grad.u.as_mut() {
            match layer.spec.kind {
                LayerKind::Gru => {
                    if t > 0 {
                        let prev_out = slab.out.index_axis(Axis(0), t - 1);
                        general_mat_mul(
                            one,
                            &d_pre.slice(s![t, ..2 * h, ..]),
                            &prev_out.t(),
                            one,
                            &mut du.slice_mut(s![..2 * h, ..]),
                        );
                    }
                    let rp_t = slab.reset_prod.as_ref().unwrap().index_axis(Axis(0), t);
                    general_mat_mul(
                        one,
                        &d_pre.slice(s![t, 2 * h.., ..]),
                        &rp_t.t(),
                        one,
                        &mut du.slice_mut(s![2 * h.., ..]),
                    );
                }
                _ => {
                    if t > 0 {
                        let prev_out = slab.out.index_axis(Axis(0), t - 1);
                        general_mat_mul(one, &dp_t, &prev_out.t(), one, du);
                    }
                }
            }
        }
    }
    d_x
}

/// Mean-squared-error gradients over a window with per-step targets.
///
/// Loss is the mean over time, batch and output dimensions of the squared
/// error; returns the gradient set and the loss value.
pub fn bptt_gradients<F: Real>(
    net: &RecurrentNet<F>,
    inputs: &ArrayView3<'_, F>,
    targets: &ArrayView3<'_, F>,
) -> Result<(Gradients<F>, f64)> {
    if inputs.dim().0 != targets.dim().0 || inputs.dim().2 != targets.dim().2 {
        return Err(Error::invalid_argument(format!(
            "input sequence {:?} and target sequence {:?} disagree",
            inputs.dim(),
            targets.dim()
        )));
    }
    if targets.dim().1 != net.output_size() {
        return Err(Error::ShapeMismatch {
            context: "bptt targets",
            expected: format!("{} outputs", net.output_size()),
            actual: format!("{} outputs", targets.dim().1),
        });
    }
    let caches = forward_slab(net, inputs)?;
    let top = caches.top();
    let count = F::from_f64_lossy(top.len() as f64);
    let two = F::from_f64_lossy(2.0);
    let mut loss = F::zero();
    let mut d_top = Array3::zeros(top.dim());
    ndarray::azip!((d in &mut d_top, &y in top, &tv in targets) {
        let e = y - tv;
        loss += e * e;
        *d = two * e / count;
    });
    let grads = backward_slab(net, &caches, d_top);
    Ok((grads, (loss / count).to_f64_lossy()))
}

/// MSE gradients with a target for the final step only (the windowed
/// prediction regime: many-to-one). Loss is averaged over batch and outputs.
pub(crate) fn bptt_final_step<F: Real>(
    net: &RecurrentNet<F>,
    inputs: &ArrayView3<'_, F>,
    final_targets: &ArrayView2<'_, F>,
) -> Result<(Gradients<F>, f64)> {
    let (steps, _, batch) = inputs.dim();
    if final_targets.dim() != (net.output_size(), batch) {
        return Err(Error::ShapeMismatch {
            context: "final-step targets",
            expected: format!("({}, {batch})", net.output_size()),
            actual: format!("{:?}", final_targets.dim()),
        });
    }
    let caches = forward_slab(net, inputs)?;
    let top = caches.top();
    let count = F::from_f64_lossy(final_targets.len() as f64);
    let two = F::from_f64_lossy(2.0);
    let mut loss = F::zero();
    let mut d_top = Array3::zeros(top.dim());
    {
        let mut d_last = d_top.index_axis_mut(Axis(0), steps - 1);
        let y_last = top.index_axis(Axis(0), steps - 1);
        ndarray::azip!((d in &mut d_last, &y in &y_last, &tv in final_targets) {
            let e = y - tv;
            loss += e * e;
            *d = two * e / count;
        });
    }
    let grads = backward_slab(net, &caches, d_top);
    Ok((grads, (loss / count).to_f64_lossy()))
}
