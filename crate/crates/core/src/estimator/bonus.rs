use nalgebra::DMatrix;

use super::DesignMatrix;
use crate::environment::EmbeddingTable;
use crate::error::{Error, Result};
use crate::slate::{ItemId, UserId};

/// Saturation threshold `τ_min = (8 M b_max / α_min) · ln(|D| / δ)`.
pub fn tau_min(slate_size: usize, b_max: f64, alpha_min: f64, corpus_size: usize, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(b_max > 0.0 && alpha_min > 0.0) || slate_size == 0 || corpus_size == 0 {
        return Err(Error::invalid("τ_min needs positive M, b_max, α_min and corpus size"));
    }
    Ok(8.0 * slate_size as f64 * b_max / alpha_min * (corpus_size as f64 / delta).ln())
}

/// `γ_t(δ) = 4e⁴M² (√(λM) L + 2√(ln(1/δ) + M d ln(1 + t/(λd))))`.
pub fn gamma(t: f64, delta: f64, slate_size: usize, dim: usize, lambda: f64, norm_total: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(lambda > 0.0) || dim == 0 || t < 0.0 {
        return Err(Error::invalid("γ_t needs λ > 0, d > 0 and t ≥ 0"));
    }
    let m = slate_size as f64;
    let d = dim as f64;
    let e4 = 4f64.exp();
    let inner = (1.0 / delta).ln() + m * d * (1.0 + t / (lambda * d)).ln();
    Ok(4.0 * e4 * m * m * ((lambda * m).sqrt() * norm_total + 2.0 * inner.sqrt()))
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("confidence δ must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Problem constants feeding the exploration bonus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BonusParams {
    pub delta: f64,
    pub rho_min: f64,
    pub slate_size: usize,
    /// Dimension `d` in `γ_t`.
    pub dim: usize,
    pub norm_total: f64,
    pub lambda: f64,
    /// Multiplier on the whole bonus; 1 is the literal formula.
    pub scale: f64,
}

impl BonusParams {
    /// `scale · (4√M + 1/√(1 − ρ_min)) · γ_t(δ)`: the bonus without its data term.
    pub fn coefficient(&self, t: f64) -> Result<f64> {
        if !(self.rho_min >= 0.0 && self.rho_min < 1.0) {
            return Err(Error::invalid(format!("ρ_min must lie in [0, 1), got {}", self.rho_min)));
        }
        let m = self.slate_size as f64;
        let g = gamma(t, self.delta, self.slate_size, self.dim, self.lambda, self.norm_total)?;
        Ok(self.scale * (4.0 * m.sqrt() + 1.0 / (1.0 - self.rho_min).sqrt()) * g)
    }
}

/// `ε_{t,δ}(s)` with the expectation taken over the given per-user embeddings
/// `x(u, s)` of one slate.
pub fn exploration_bonus(features: &[Vec<f64>], design: &DesignMatrix, t: f64, params: &BonusParams) -> Result<f64> {
    if features.is_empty() {
        return Err(Error::invalid("the user population is empty"));
    }
    let mean = features.iter().map(|x| design.sq_norm_inv(x)).sum::<f64>() / features.len() as f64;
    Ok(params.coefficient(t)? * mean.max(0.0).sqrt())
}

/// Precomputed `E_u ‖x(u, s)‖²_{V⁻¹}` for every slate.
///
/// With `f(u, I) = (x̃_q(u, I), x̃_p(u, I))` and `C(I, J) = E_u f(u, I) f(u, J)ᵀ`,
/// the expectation is `Σ_{a,b} ⟨W_ab, C(I_a, I_b)⟩` where `W_ab` are the slot
/// blocks of `V⁻¹`.
pub(crate) struct BonusTable {
    m: usize,
    n: usize,
    dq: usize,
    dp: usize,
    second_moments: Vec<f64>,
    table: Vec<f64>,
}

impl BonusTable {
    pub(crate) fn new(quality: &EmbeddingTable, popularity: Option<&EmbeddingTable>, slate_size: usize) -> Self {
        let n = quality.items;
        let dq = quality.dim;
        let dp = popularity.map_or(0, |p| p.dim);
        let e = dq + dp;
        let users = quality.users;
        let mut c = vec![0.0; n * n * e * e];
        let mut f = vec![0.0; n * e];
        for u in 0..users {
            for i in 0..n {
                let row = &mut f[i * e..(i + 1) * e];
                row[..dq].copy_from_slice(quality.get(UserId(u), ItemId(i)));
                if let Some(p) = popularity {
                    row[dq..].copy_from_slice(p.get(UserId(u), ItemId(i)));
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let out = &mut c[(i * n + j) * e * e..(i * n + j + 1) * e * e];
                    for k in 0..e {
                        let fk = f[i * e + k];
                        for l in 0..e {
                            out[k * e + l] += fk * f[j * e + l];
                        }
                    }
                }
            }
        }
        let w = 1.0 / users.max(1) as f64;
        c.iter_mut().for_each(|v| *v *= w);
        BonusTable {
            m: slate_size,
            n,
            dq,
            dp,
            second_moments: c,
            table: vec![0.0; slate_size * slate_size * n * n],
        }
    }

    fn index(&self, slot: usize, k: usize) -> usize {
        if k < self.dq {
            slot * self.dq + k
        } else {
            self.m * self.dq + slot * self.dp + (k - self.dq)
        }
    }

    /// Rebuilds the lookup for a new `V⁻¹`.
    pub(crate) fn refresh(&mut self, inv: &DMatrix<f64>) {
        let (m, n) = (self.m, self.n);
        let e = self.dq + self.dp;
        let mut w = vec![0.0; e * e];
        for a in 0..m {
            for b in 0..m {
                for k in 0..e {
                    for l in 0..e {
                        w[k * e + l] = inv[(self.index(a, k), self.index(b, l))];
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        let c = &self.second_moments[(i * n + j) * e * e..(i * n + j + 1) * e * e];
                        self.table[((a * m + b) * n + i) * n + j] = c.iter().zip(&w).map(|(x, y)| x * y).sum();
                    }
                }
            }
        }
    }

    pub(crate) fn expected_sq_norm(&self, slate: &[usize]) -> f64 {
        let (m, n) = (self.m, self.n);
        let mut total = 0.0;
        for (a, &i) in slate.iter().enumerate() {
            for (b, &j) in slate.iter().enumerate() {
                total += self.table[((a * m + b) * n + i) * n + j];
            }
        }
        total
    }
}
