//! Forward recursion and backpropagation through time for both cell kinds.
//!
//! Inputs here are already normalized, row-major L×d.

use crate::error::Result;
use crate::model::{CellKind, Layout, RecurrentModel};

/// Reusable scratch buffers for forward and backward passes.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    /// post-activation gate values, L × G·h
    acts: Vec<f64>,
    /// hidden states, (L+1) × h, row 0 is h_0 = 0
    hs: Vec<f64>,
    /// LSTM cell states (L+1) × h; GRU stores r⊙h_prev in L × h
    cs: Vec<f64>,
    /// LSTM tanh(c_t), L × h
    tcs: Vec<f64>,
    da: Vec<f64>,
    dh: Vec<f64>,
    dh2: Vec<f64>,
    dc: Vec<f64>,
    drh: Vec<f64>,
    pub(crate) norm_buf: Vec<f64>,
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Binary cross-entropy in logit form.
#[inline]
pub(crate) fn bce_logit(z: f64, y: f64) -> f64 {
    softplus(z) - y * z
}

pub(crate) fn clamp_prob(p: f64) -> f64 {
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// y[r] += Σ_j m[(row0 + r)·cols + j] · v[j] for r in 0..y.len()
#[inline]
fn matvec_add(m: &[f64], cols: usize, row0: usize, v: &[f64], y: &mut [f64]) {
    for (r, yr) in y.iter_mut().enumerate() {
        let row = &m[(row0 + r) * cols..(row0 + r + 1) * cols];
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(v) {
            acc += a * b;
        }
        *yr += acc;
    }
}

/// out[j] += Σ_r m[(row0 + r)·cols + j] · v[r]
#[inline]
fn matvec_t_add(m: &[f64], cols: usize, row0: usize, v: &[f64], out: &mut [f64]) {
    for (r, vr) in v.iter().enumerate() {
        if *vr == 0.0 {
            continue;
        }
        let row = &m[(row0 + r) * cols..(row0 + r + 1) * cols];
        for (o, a) in out.iter_mut().zip(row) {
            *o += a * vr;
        }
    }
}

/// g[(row0 + r)·cols + j] += a[r] · v[j]
#[inline]
fn outer_add(g: &mut [f64], cols: usize, row0: usize, a: &[f64], v: &[f64]) {
    for (r, ar) in a.iter().enumerate() {
        if *ar == 0.0 {
            continue;
        }
        let row = &mut g[(row0 + r) * cols..(row0 + r + 1) * cols];
        for (gj, vj) in row.iter_mut().zip(v) {
            *gj += ar * vj;
        }
    }
}

/// Runs the recursion, leaving caches in `ws`, and returns the readout logit.
fn run_forward(model: &RecurrentModel, x: &[f64], ws: &mut Workspace) -> f64 {
    let lay = model.layout();
    let Layout { d, h, g } = lay;
    let l = x.len() / d;
    let p = &model.params;
    let w = &p[lay.w()];
    let u = &p[lay.u()];
    let b = &p[lay.b()];
    let gh = g * h;

    ws.acts.clear();
    ws.acts.resize(l * gh, 0.0);
    ws.hs.clear();
    ws.hs.resize((l + 1) * h, 0.0);
    match model.kind {
        CellKind::Lstm => {
            ws.cs.clear();
            ws.cs.resize((l + 1) * h, 0.0);
            ws.tcs.clear();
            ws.tcs.resize(l * h, 0.0);
        }
        CellKind::Gru => {
            ws.cs.clear();
            ws.cs.resize(l * h, 0.0);
        }
    }

    for t in 0..l {
        let xt = &x[t * d..(t + 1) * d];
        let (hs_prev, hs_next) = ws.hs.split_at_mut((t + 1) * h);
        let h_prev = &hs_prev[t * h..];
        let h_new = &mut hs_next[..h];
        let a = &mut ws.acts[t * gh..(t + 1) * gh];
        a.copy_from_slice(b);
        match model.kind {
            CellKind::Lstm => {
                matvec_add(w, d, 0, xt, a);
                matvec_add(u, h, 0, h_prev, a);
                let (cs_prev, cs_next) = ws.cs.split_at_mut((t + 1) * h);
                let c_prev = &cs_prev[t * h..];
                let c_new = &mut cs_next[..h];
                let tc = &mut ws.tcs[t * h..(t + 1) * h];
                for k in 0..h {
                    let i = sigmoid(a[k]);
                    let f = sigmoid(a[h + k]);
                    let gg = a[2 * h + k].tanh();
                    let o = sigmoid(a[3 * h + k]);
                    a[k] = i;
                    a[h + k] = f;
                    a[2 * h + k] = gg;
                    a[3 * h + k] = o;
                    let c = f * c_prev[k] + i * gg;
                    c_new[k] = c;
                    tc[k] = c.tanh();
                    h_new[k] = o * tc[k];
                }
            }
            CellKind::Gru => {
                matvec_add(w, d, 0, xt, a);
                // r and z see h_prev directly, n sees r ⊙ h_prev
                matvec_add(u, h, 0, h_prev, &mut a[..2 * h]);
                let rh = &mut ws.cs[t * h..(t + 1) * h];
                for k in 0..2 * h {
                    a[k] = sigmoid(a[k]);
                }
                for k in 0..h {
                    rh[k] = a[k] * h_prev[k];
                }
                matvec_add(u, h, 2 * h, rh, &mut a[2 * h..]);
                for k in 0..h {
                    let n = a[2 * h + k].tanh();
                    a[2 * h + k] = n;
                    let z = a[h + k];
                    h_new[k] = (1.0 - z) * n + z * h_prev[k];
                }
            }
        }
    }

    let h_last = &ws.hs[l * h..(l + 1) * h];
    let w_out = &p[lay.w_out()];
    let mut z = p[lay.b_out()];
    for (a, b) in w_out.iter().zip(h_last) {
        z += a * b;
    }
    z
}

pub(crate) fn logit_normalized(model: &RecurrentModel, x: &[f64], ws: &mut Workspace) -> f64 {
    run_forward(model, x, ws)
}

pub(crate) fn forward_normalized(model: &RecurrentModel, x: &[f64], ws: &mut Workspace) -> f64 {
    clamp_prob(sigmoid(run_forward(model, x, ws)))
}

/// Adds the gradient of the loss for one normalized sequence into `grad`
/// and returns (loss, probability).
pub(crate) fn accumulate_grad(
    model: &RecurrentModel,
    x: &[f64],
    y: f64,
    ws: &mut Workspace,
    grad: &mut [f64],
) -> (f64, f64) {
    let logit = run_forward(model, x, ws);
    let prob = sigmoid(logit);
    let loss = bce_logit(logit, y);
    let dz = prob - y;

    let lay = model.layout();
    let Layout { d, h, g } = lay;
    let gh = g * h;
    let l = x.len() / d;
    let p = &model.params;
    let u = &p[lay.u()];
    let w_out = &p[lay.w_out()];

    let (r_w, r_u, r_b, r_wo, i_bo) = (lay.w(), lay.u(), lay.b(), lay.w_out(), lay.b_out());
    {
        let h_last = &ws.hs[l * h..(l + 1) * h];
        for (gk, hk) in grad[r_wo].iter_mut().zip(h_last) {
            *gk += dz * hk;
        }
        grad[i_bo] += dz;
    }
    ws.dh.clear();
    ws.dh.extend(w_out.iter().map(|w| dz * w));
    ws.dc.clear();
    ws.dc.resize(h, 0.0);
    ws.da.clear();
    ws.da.resize(gh, 0.0);
    ws.dh2.clear();
    ws.dh2.resize(h, 0.0);

    let (g_w, rest) = grad.split_at_mut(r_u.start);
    let (g_u, rest) = rest.split_at_mut(r_b.start - r_u.start);
    let g_b = &mut rest[..r_b.len()];
    debug_assert_eq!(g_w.len(), r_w.len());

    for t in (0..l).rev() {
        let xt = &x[t * d..(t + 1) * d];
        let a = &ws.acts[t * gh..(t + 1) * gh];
        let h_prev = &ws.hs[t * h..(t + 1) * h];
        let da = &mut ws.da;
        let dh = &mut ws.dh;
        let dh_prev = &mut ws.dh2;
        dh_prev.iter_mut().for_each(|v| *v = 0.0);
        match model.kind {
            CellKind::Lstm => {
                let c_prev = &ws.cs[t * h..(t + 1) * h];
                let tc = &ws.tcs[t * h..(t + 1) * h];
                let dc = &mut ws.dc;
                for k in 0..h {
                    let (i, f, gg, o) = (a[k], a[h + k], a[2 * h + k], a[3 * h + k]);
                    let d_o = dh[k] * tc[k];
                    let c_grad = dc[k] + dh[k] * o * (1.0 - tc[k] * tc[k]);
                    da[k] = c_grad * gg * i * (1.0 - i);
                    da[h + k] = c_grad * c_prev[k] * f * (1.0 - f);
                    da[2 * h + k] = c_grad * i * (1.0 - gg * gg);
                    da[3 * h + k] = d_o * o * (1.0 - o);
                    dc[k] = c_grad * f;
                }
                outer_add(g_w, d, 0, da, xt);
                outer_add(g_u, h, 0, da, h_prev);
                for (gb, v) in g_b.iter_mut().zip(da.iter()) {
                    *gb += v;
                }
                matvec_t_add(u, h, 0, da, dh_prev);
            }
            CellKind::Gru => {
                let rh = &ws.cs[t * h..(t + 1) * h];
                let d_rh = &mut ws.drh;
                d_rh.clear();
                d_rh.resize(h, 0.0);
                for k in 0..h {
                    let (z, n) = (a[h + k], a[2 * h + k]);
                    let dn = dh[k] * (1.0 - z);
                    da[h + k] = dh[k] * (h_prev[k] - n) * z * (1.0 - z);
                    da[2 * h + k] = dn * (1.0 - n * n);
                    dh_prev[k] = dh[k] * z;
                }
                let da_n = &da[2 * h..];
                matvec_t_add(u, h, 2 * h, da_n, d_rh);
                outer_add(g_u, h, 2 * h, da_n, rh);
                for k in 0..h {
                    let r = a[k];
                    da[k] = d_rh[k] * h_prev[k] * r * (1.0 - r);
                    dh_prev[k] += d_rh[k] * r;
                }
                outer_add(g_w, d, 0, da, xt);
                outer_add(g_u, h, 0, &da[..2 * h], h_prev);
                for (gb, v) in g_b.iter_mut().zip(da.iter()) {
                    *gb += v;
                }
                matvec_t_add(u, h, 0, &da[..2 * h], dh_prev);
            }
        }
        std::mem::swap(&mut ws.dh, &mut ws.dh2);
    }
    (loss, prob)
}

/// Loss and full parameter gradient for one raw (unnormalized) sequence.
/// The model's stored normalization is applied first and treated as constant.
pub fn loss_and_grad(model: &RecurrentModel, seq: &[f64], label: bool) -> Result<(f64, Vec<f64>)> {
    model.forward(seq)?;
    let mut ws = Workspace::default();
    let mut x = Vec::new();
    model.norm.apply(seq, &mut x);
    let mut grad = vec![0.0; model.params.len()];
    let (loss, _) = accumulate_grad(model, &x, if label { 1.0 } else { 0.0 }, &mut ws, &mut grad);
    Ok((loss, grad))
}

/// Loss only, used by the finite-difference checker.
pub(crate) fn loss_only(model: &RecurrentModel, x: &[f64], y: f64, ws: &mut Workspace) -> f64 {
    bce_logit(run_forward(model, x, ws), y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_stable() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert!(bce_logit(800.0, 1.0).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_symmetry() {
        for z in [-30.0, -2.0, -0.1, 0.0, 0.5, 7.0] {
            assert!((sigmoid(z) + sigmoid(-z) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_sequence_uses_bias() {
        for kind in [CellKind::Lstm, CellKind::Gru] {
            let mut m = RecurrentModel::init(kind, 3, 4, 9).unwrap();
            *m.b_out_mut() = 0.7;
            assert_eq!(m.forward(&[]).unwrap(), sigmoid(0.7));
        }
    }

    #[test]
    fn lstm_one_step_by_hand() {
        // d = 1, h = 1, so every matrix is a scalar
        let mut m = RecurrentModel::init(CellKind::Lstm, 1, 1, 0).unwrap();
        // W: i f g o, U: i f g o, b: i f g o, w_out, b_out
        m.params = vec![0.5, -0.3, 0.8, 0.2, 0.1, 0.1, 0.1, 0.1, 0.0, 1.0, 0.0, 0.0, 2.0, -0.5];
        let x = 0.9;
        let i = sigmoid(0.5 * x);
        let g = (0.8f64 * x).tanh();
        let o = sigmoid(0.2 * x);
        let c = i * g;
        let h = o * c.tanh();
        let want = sigmoid(2.0 * h - 0.5);
        assert!((m.forward(&[x]).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn gru_one_step_by_hand() {
        let mut m = RecurrentModel::init(CellKind::Gru, 1, 1, 0).unwrap();
        // W: r z n, U: r z n, b: r z n, w_out, b_out
        m.params = vec![0.4, -0.6, 1.1, 0.3, 0.3, 0.3, 0.1, 0.2, -0.1, 1.5, 0.25];
        let x = -0.7;
        let z = sigmoid(-0.6 * x + 0.2);
        let n = (1.1f64 * x - 0.1).tanh();
        let h = (1.0 - z) * n;
        let want = sigmoid(1.5 * h + 0.25);
        assert!((m.forward(&[x]).unwrap() - want).abs() < 1e-15);
    }
}
