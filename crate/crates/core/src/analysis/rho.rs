use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rankers::{ordered_slate_count, ObservableView};
use crate::slate::{Slate, UserId};

/// Eigenvalues above `-EIGEN_TOL` count as non-negative.
pub const EIGEN_TOL: f64 = 1e-10;

/// Second moments of `(x_q, x_p)` over the user population.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationBlock {
    pub sigma_qq: DMatrix<f64>,
    pub sigma_qp: DMatrix<f64>,
    pub sigma_pp: DMatrix<f64>,
}

impl CorrelationBlock {
    pub fn new(sigma_qq: DMatrix<f64>, sigma_qp: DMatrix<f64>, sigma_pp: DMatrix<f64>) -> Result<Self> {
        let (dq, dp) = (sigma_qq.nrows(), sigma_pp.nrows());
        if !sigma_qq.is_square() || !sigma_pp.is_square() || sigma_qp.shape() != (dq, dp) {
            return Err(Error::invalid("correlation blocks have inconsistent shapes"));
        }
        Ok(CorrelationBlock {
            sigma_qq,
            sigma_qp,
            sigma_pp,
        })
    }

    /// Splits a full `(d_q + d_p)`-square matrix after its first `d_q` rows.
    pub fn from_full(full: &DMatrix<f64>, quality_dim: usize) -> Result<Self> {
        let d = full.nrows();
        if !full.is_square() || quality_dim > d {
            return Err(Error::invalid("cannot split the matrix at the quality dimension"));
        }
        let dp = d - quality_dim;
        Self::new(
            full.view((0, 0), (quality_dim, quality_dim)).into_owned(),
            full.view((0, quality_dim), (quality_dim, dp)).into_owned(),
            full.view((quality_dim, quality_dim), (dp, dp)).into_owned(),
        )
    }

    /// Averages `x xᵀ` over embeddings `x = (x_q, x_p)`.
    pub fn from_features(features: &[Vec<f64>], quality_dim: usize) -> Result<Self> {
        let d = features.first().map_or(0, |x| x.len());
        if features.is_empty() || features.iter().any(|x| x.len() != d) {
            return Err(Error::invalid("need a non-empty set of equal-length embeddings"));
        }
        let mut full = DMatrix::<f64>::zeros(d, d);
        for x in features {
            let v = nalgebra::DVector::from_column_slice(x);
            full.ger(1.0, &v, &v, 1.0);
        }
        full /= features.len() as f64;
        Self::from_full(&full, quality_dim)
    }

    pub fn quality_dim(&self) -> usize {
        self.sigma_qq.nrows()
    }

    pub fn popularity_dim(&self) -> usize {
        self.sigma_pp.nrows()
    }

    /// `[[ρ Σ_qq, Σ_qp], [Σ_qpᵀ, Σ_pp]]`.
    pub fn assemble(&self, rho: f64) -> DMatrix<f64> {
        let (dq, dp) = (self.quality_dim(), self.popularity_dim());
        let mut m = DMatrix::<f64>::zeros(dq + dp, dq + dp);
        m.view_mut((0, 0), (dq, dq)).copy_from(&(&self.sigma_qq * rho));
        m.view_mut((0, dq), (dq, dp)).copy_from(&self.sigma_qp);
        m.view_mut((dq, 0), (dp, dq)).copy_from(&self.sigma_qp.transpose());
        m.view_mut((dq, dq), (dp, dp)).copy_from(&self.sigma_pp);
        m
    }

    pub fn min_eigenvalue(&self, rho: f64) -> f64 {
        let m = self.assemble(rho);
        if m.nrows() == 0 {
            return 0.0;
        }
        m.symmetric_eigenvalues().min()
    }

    fn feasible(&self, rho: f64) -> bool {
        self.min_eigenvalue(rho) >= -EIGEN_TOL
    }
}

/// Outcome of the variability check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "rho", rename_all = "kebab-case")]
pub enum RhoEstimate {
    /// Smallest feasible ρ, to within the tolerance.
    Feasible(f64),
    /// Infeasible for every ρ below `1 − tol`.
    Infeasible,
}

impl RhoEstimate {
    pub fn value(&self) -> Option<f64> {
        match self {
            RhoEstimate::Feasible(r) => Some(*r),
            RhoEstimate::Infeasible => None,
        }
    }
}

/// Smallest `ρ ∈ [0, 1)` with the assembled block PSD, found by bisection.
pub fn estimate_rho_min(block: &CorrelationBlock, tol: f64) -> Result<RhoEstimate> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    if !block.feasible(1.0) {
        return Err(Error::invalid(format!(
            "block is not PSD at ρ = 1 (min eigenvalue {:.3e})",
            block.min_eigenvalue(1.0)
        )));
    }
    let mut hi = 1.0 - tol;
    if !block.feasible(hi) {
        return Ok(RhoEstimate::Infeasible);
    }
    if block.feasible(0.0) {
        return Ok(RhoEstimate::Feasible(0.0));
    }
    let mut lo = 0.0;
    while hi - lo > tol / 2.0 {
        let mid = 0.5 * (lo + hi);
        if block.feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(RhoEstimate::Feasible(hi))
}

/// The `index`-th ordered slate in lexicographic order.
pub fn nth_ordered_slate(corpus_size: usize, slate_size: usize, mut index: u128) -> Slate {
    let mut free: Vec<usize> = (0..corpus_size).collect();
    let mut items = Vec::with_capacity(slate_size);
    for k in 0..slate_size {
        let below = ordered_slate_count(corpus_size - k - 1, slate_size - k - 1);
        let pick = (index / below) as usize;
        index %= below;
        items.push(free.remove(pick));
    }
    Slate::from_indices_unchecked(&items)
}

/// `ρ_min` of an instance: the largest per-slate estimate over `sample`
/// slates spread evenly through the lexicographic order (all slates when
/// there are fewer). Infeasible if any sampled slate is.
pub fn estimate_rho_min_for_instance(
    view: &ObservableView<'_>,
    with_popularity: bool,
    sample: usize,
    tol: f64,
) -> Result<RhoEstimate> {
    let total = ordered_slate_count(view.corpus_size(), view.slate_size());
    let k = (sample.max(1) as u128).min(total);
    let mut worst = 0.0_f64;
    for j in 0..k {
        let slate = nth_ordered_slate(view.corpus_size(), view.slate_size(), j * total / k);
        let features: Vec<Vec<f64>> = (0..view.user_count())
            .map(|u| view.features(UserId(u), &slate, with_popularity))
            .collect();
        let block = CorrelationBlock::from_features(&features, view.quality_dim())?;
        match estimate_rho_min(&block, tol)? {
            RhoEstimate::Feasible(r) => worst = worst.max(r),
            RhoEstimate::Infeasible => return Ok(RhoEstimate::Infeasible),
        }
    }
    Ok(RhoEstimate::Feasible(worst))
}
