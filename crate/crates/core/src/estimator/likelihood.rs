use nalgebra::DMatrix;

use super::{FilteredHistory, ParamVector, RecordGroup};
use crate::choice::softmax_into;
use crate::environment::dot;

/// Fills `z` with the model's click probabilities for a group and returns
/// `(z_0, log(1 + Σ e^{δ_i}))`.
fn group_probs(psi: &ParamVector, g: &RecordGroup, kappa: &[f64], delta: &mut [f64], z: &mut [f64]) -> (f64, f64) {
    psi.dispositions_into(&g.x, kappa, delta);
    let z0 = softmax_into(delta, z);
    let max = delta.iter().copied().fold(0.0_f64, f64::max);
    let lse = max + ((-max).exp() + delta.iter().map(|d| (d - max).exp()).sum::<f64>()).ln();
    (z0, lse)
}

fn scratch(psi: &ParamVector) -> (Vec<f64>, Vec<f64>) {
    let m = psi.layout().slate_size;
    (vec![0.0; m], vec![0.0; m])
}

/// Regularized log-likelihood
/// `Σ_k Σ_i 1{c_k = i} log z_i(δ_ψ(u_k, s_k)) − (λ/2)‖ψ‖²`, with `i = 0` the no-click.
pub fn log_likelihood(psi: &ParamVector, history: &FilteredHistory, lambda: f64) -> f64 {
    let (mut delta, mut z) = scratch(psi);
    let mut ll = 0.0;
    for g in history.groups() {
        let (_, lse) = group_probs(psi, g, history.rank_bias(), &mut delta, &mut z);
        ll -= g.total * lse;
        for (i, &d) in delta.iter().enumerate() {
            ll += g.counts[i + 1] * d;
        }
    }
    ll - 0.5 * lambda * dot(psi.values(), psi.values())
}

/// Exact gradient `Σ_k Σ_i (1{c_k = i} − z_i) x_k` in block `i`, minus `λψ`.
pub fn log_likelihood_gradient(psi: &ParamVector, history: &FilteredHistory, lambda: f64) -> Vec<f64> {
    let (mut delta, mut z) = scratch(psi);
    let d = psi.layout().block_dim();
    let mut grad: Vec<f64> = psi.values().iter().map(|v| -lambda * v).collect();
    for g in history.groups() {
        group_probs(psi, g, history.rank_bias(), &mut delta, &mut z);
        for (i, zi) in z.iter().enumerate() {
            let r = g.counts[i + 1] - g.total * zi;
            if r != 0.0 {
                for (o, x) in grad[i * d..(i + 1) * d].iter_mut().zip(&g.x) {
                    *o += r * x;
                }
            }
        }
    }
    grad
}

/// Negative Hessian `Σ_k (diag z − z zᵀ) ⊗ x_k x_kᵀ + λI`.
///
/// With `λ = 1` this is also the Jacobian of [`g_map`].
pub fn negative_hessian(psi: &ParamVector, history: &FilteredHistory, lambda: f64) -> DMatrix<f64> {
    let layout = psi.layout();
    let (m, d) = (layout.slate_size, layout.block_dim());
    let groups = history.groups();
    let n = groups.len();
    let mut h = DMatrix::<f64>::identity(m * d, m * d) * lambda;
    if n == 0 {
        return h;
    }
    let x = DMatrix::from_fn(n, d, |r, c| groups[r].x[c]);
    // w[(a, b)][g] = total_g (z_a 1{a = b} − z_a z_b)
    let (mut delta, mut z) = scratch(psi);
    let mut zs = vec![0.0; n * m];
    for (k, g) in groups.iter().enumerate() {
        group_probs(psi, g, history.rank_bias(), &mut delta, &mut z);
        zs[k * m..(k + 1) * m].copy_from_slice(&z);
    }
    let mut y = DMatrix::<f64>::zeros(n, d);
    for a in 0..m {
        for b in a..m {
            for (k, g) in groups.iter().enumerate() {
                let za = zs[k * m + a];
                let zb = zs[k * m + b];
                let w = g.total * (if a == b { za } else { 0.0 } - za * zb);
                for c in 0..d {
                    y[(k, c)] = w * x[(k, c)];
                }
            }
            let block = x.tr_mul(&y);
            let mut view = h.view_mut((a * d, b * d), (d, d));
            view += &block;
            if a != b {
                let mut view = h.view_mut((b * d, a * d), (d, d));
                view += block.transpose();
            }
        }
    }
    h
}

/// `g(ψ) = ψ + Σ_k z(δ_ψ(u_k, s_k)) ⊗ x_k`.
pub fn g_map(psi: &ParamVector, history: &FilteredHistory) -> Vec<f64> {
    let (mut delta, mut z) = scratch(psi);
    let d = psi.layout().block_dim();
    let mut out = psi.values().to_vec();
    for g in history.groups() {
        group_probs(psi, g, history.rank_bias(), &mut delta, &mut z);
        for (i, zi) in z.iter().enumerate() {
            let w = g.total * zi;
            for (o, x) in out[i * d..(i + 1) * d].iter_mut().zip(&g.x) {
                *o += w * x;
            }
        }
    }
    out
}

/// `J_g(ψ) v` without forming the Jacobian; `J_g` is symmetric.
pub(crate) fn g_jacobian_apply(psi: &ParamVector, history: &FilteredHistory, v: &[f64]) -> Vec<f64> {
    let (mut delta, mut z) = scratch(psi);
    let m = psi.layout().slate_size;
    let d = psi.layout().block_dim();
    let mut out = v.to_vec();
    let mut u = vec![0.0; m];
    for g in history.groups() {
        group_probs(psi, g, history.rank_bias(), &mut delta, &mut z);
        for (a, ua) in u.iter_mut().enumerate() {
            *ua = dot(&g.x, &v[a * d..(a + 1) * d]);
        }
        let zu = dot(&z, &u);
        for a in 0..m {
            let w = g.total * z[a] * (u[a] - zu);
            if w != 0.0 {
                for (o, x) in out[a * d..(a + 1) * d].iter_mut().zip(&g.x) {
                    *o += w * x;
                }
            }
        }
    }
    out
}
