use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::likelihood::g_jacobian_apply;
use super::params::project_slice_to_balls;
use super::{g_map, log_likelihood, log_likelihood_gradient, negative_hessian, DesignMatrix, FilteredHistory, ParamVector};
use crate::environment::{dot, NormBounds};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            grad_tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

/// Maximizes the regularized log-likelihood by damped Newton steps with
/// Armijo backtracking, warm-started from `start` when given.
pub fn fit_mle(
    history: &FilteredHistory,
    lambda: f64,
    start: Option<&ParamVector>,
    opts: FitOptions,
) -> Result<ParamVector> {
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("ridge parameter must be positive, got {lambda}")));
    }
    let layout = history.layout();
    let mut psi = match start {
        Some(s) if s.layout() == layout => s.clone(),
        _ => ParamVector::zeros(layout),
    };
    if history.is_empty() {
        return Ok(ParamVector::zeros(layout));
    }
    // Gradient entries are sums over records, so rounding grows with the count.
    let floor = 1e-6 * (1.0 + history.len() as f64);
    let mut f = log_likelihood(&psi, history, lambda);
    for iter in 0..opts.max_iter {
        let grad = log_likelihood_gradient(&psi, history, lambda);
        let gnorm = dot(&grad, &grad).sqrt();
        if gnorm <= opts.grad_tol {
            log::debug!("mle converged after {iter} Newton steps");
            return Ok(psi);
        }
        let h = negative_hessian(&psi, history, lambda);
        let step = h
            .cholesky()
            .ok_or(Error::NonConvergence {
                stage: "mle",
                iterations: iter,
                residual: gnorm,
            })?
            .solve(&DVector::from_column_slice(&grad));
        let slope = dot(&grad, step.as_slice());

        let mut alpha = 1.0;
        let mut accepted = false;
        let mut trial = psi.clone();
        while alpha > 1e-10 {
            for ((t, p), s) in trial.values_mut().iter_mut().zip(psi.values()).zip(step.iter()) {
                *t = p + alpha * s;
            }
            let ft = log_likelihood(&trial, history, lambda);
            // Near the optimum the decrease is below the rounding of f itself.
            if ft >= f + 1e-4 * alpha * slope || (alpha == 1.0 && slope < 1e-10 * (1.0 + f.abs())) {
                f = ft;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            if gnorm <= floor {
                log::debug!("mle stopped at gradient norm {gnorm:.3e} (rounding floor {floor:.3e})");
                return Ok(psi);
            }
            return Err(Error::NonConvergence {
                stage: "mle",
                iterations: iter,
                residual: gnorm,
            });
        }
        std::mem::swap(&mut psi, &mut trial);
    }
    let grad = log_likelihood_gradient(&psi, history, lambda);
    let gnorm = dot(&grad, &grad).sqrt();
    if gnorm <= opts.grad_tol.max(floor) {
        return Ok(psi);
    }
    Err(Error::NonConvergence {
        stage: "mle",
        iterations: opts.max_iter,
        residual: gnorm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectOptions {
    /// Stop when the projected gradient is this small relative to the first one.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for ProjectOptions {
    fn default() -> Self {
        ProjectOptions {
            rel_tol: 1e-8,
            max_iter: 5_000,
        }
    }
}

struct ProjectionObjective<'a> {
    history: &'a FilteredHistory,
    inv: &'a DMatrix<f64>,
    target: Vec<f64>,
}

impl ProjectionObjective<'_> {
    /// `(F(ψ), V⁻¹-weighted residual)` with `F = ½ Σ_i ‖g_i(ψ) − g_i(ψ̂)‖²_{V⁻¹}`.
    fn eval(&self, psi: &ParamVector) -> (f64, Vec<f64>) {
        let d = self.inv.nrows();
        let r: Vec<f64> = g_map(psi, self.history).iter().zip(&self.target).map(|(a, b)| a - b).collect();
        let mut w = vec![0.0; r.len()];
        for (rb, wb) in r.chunks(d).zip(w.chunks_mut(d)) {
            let out = self.inv * DVector::from_column_slice(rb);
            wb.copy_from_slice(out.as_slice());
        }
        (0.5 * dot(&r, &w), w)
    }

    fn value(&self, psi: &ParamVector) -> f64 {
        self.eval(psi).0
    }

    fn value_and_grad(&self, psi: &ParamVector) -> (f64, Vec<f64>) {
        let (f, w) = self.eval(psi);
        (f, g_jacobian_apply(psi, self.history, &w))
    }
}

/// `argmin_ψ Σ_i ‖g_i(ψ) − g_i(ψ̂^ML)‖²_{V⁻¹}` over `‖θ_i‖ ≤ L_q`, `‖φ_i‖ ≤ L_p`,
/// by spectral projected gradient with a nonmonotone line search.
pub fn project_mle(
    psi_ml: &ParamVector,
    history: &FilteredHistory,
    design: &DesignMatrix,
    bounds: NormBounds,
    opts: ProjectOptions,
) -> Result<ParamVector> {
    project_mle_from(psi_ml, None, history, design, bounds, opts)
}

/// [`project_mle`] started from `warm` (typically the previous estimate) when
/// that point is feasible and scores better than the ball projection of `psi_ml`.
pub fn project_mle_from(
    psi_ml: &ParamVector,
    warm: Option<&ParamVector>,
    history: &FilteredHistory,
    design: &DesignMatrix,
    bounds: NormBounds,
    opts: ProjectOptions,
) -> Result<ParamVector> {
    if psi_ml.is_feasible(bounds, 1e-12) {
        return Ok(psi_ml.clone());
    }
    if design.dim() != history.layout().block_dim() {
        return Err(Error::invalid("design matrix and model dimensions differ"));
    }
    let layout = psi_ml.layout();
    let obj = ProjectionObjective {
        history,
        inv: design.inverse(),
        target: g_map(psi_ml, history),
    };
    let project = |v: &mut [f64]| project_slice_to_balls(v, layout, bounds);

    let mut x = psi_ml.clone();
    x.project_to_balls(bounds);
    if let Some(w) = warm.filter(|w| w.layout() == layout && w.is_feasible(bounds, 1e-12)) {
        if obj.value(w) < obj.value(&x) {
            x = w.clone();
        }
    }
    let (mut f, mut grad) = obj.value_and_grad(&x);
    let mut recent = vec![f];
    let mut alpha = 1.0;
    let mut scale = None;
    let n = x.values().len();
    let mut d = vec![0.0; n];
    let mut trial = x.clone();
    for iter in 0..opts.max_iter {
        // projected-gradient residual at unit step
        let mut pg: Vec<f64> = x.values().iter().zip(&grad).map(|(a, g)| a - g).collect();
        project(&mut pg);
        let res = pg.iter().zip(x.values()).map(|(p, a)| (p - a).abs()).fold(0.0, f64::max);
        let scale = *scale.get_or_insert(1.0 + res);
        if res <= opts.rel_tol * scale || f == 0.0 {
            log::debug!("projection converged after {iter} iterations");
            return Ok(x);
        }

        let mut y: Vec<f64> = x.values().iter().zip(&grad).map(|(a, g)| a - alpha * g).collect();
        project(&mut y);
        for ((di, yi), xi) in d.iter_mut().zip(&y).zip(x.values()) {
            *di = yi - xi;
        }
        let gd = dot(&grad, &d);
        let fmax = recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut step = 1.0;
        loop {
            for ((t, xi), di) in trial.values_mut().iter_mut().zip(x.values()).zip(&d) {
                *t = xi + step * di;
            }
            let ft = obj.value(&trial);
            if ft <= fmax + 1e-4 * step * gd {
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                // no representable decrease left; accept if close to stationary
                if res <= opts.rel_tol.sqrt() * scale {
                    log::debug!("projection stalled at residual {res:.3e} after {iter} iterations");
                    return Ok(x);
                }
                return Err(Error::NonConvergence {
                    stage: "projection",
                    iterations: iter,
                    residual: res,
                });
            }
        }
        let (ft, gt) = obj.value_and_grad(&trial);
        let s: Vec<f64> = trial.values().iter().zip(x.values()).map(|(a, b)| a - b).collect();
        let yk: Vec<f64> = gt.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yk);
        alpha = if sy > 0.0 { (dot(&s, &s) / sy).clamp(1e-10, 1e10) } else { 1e10 };
        std::mem::swap(&mut x, &mut trial);
        f = ft;
        grad = gt;
        recent.push(f);
        if recent.len() > 10 {
            recent.remove(0);
        }
    }
    Err(Error::NonConvergence {
        stage: "projection",
        iterations: opts.max_iter,
        residual: f,
    })
}
