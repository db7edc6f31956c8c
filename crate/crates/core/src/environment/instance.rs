//! The hidden world: ground-truth parameters, embeddings and popularity
//! dynamics.
//!
//! Slate embeddings are the concatenation of per-(user, item) embeddings in
//! slate order, so `x_q(u, s) ∈ R^{M·d_q}` where `d_q` is the per-item
//! quality dimension (likewise for popularity). Each position `i` has its own
//! parameter vector over the whole slate embedding:
//! `q_i(u, s) = x_q(u, s)ᵀ θ*_i` and the popularity cap
//! `b_i(u, s) = x_p(u, s)ᵀ φ*_i`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::slate::{ItemId, Slate, UserId};

const BOUND_SLACK: f64 = 1e-9;

/// Per-(user, item) embedding vectors, stored row-major as
/// `values[(user * items + item) * dim + k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingTable {
    pub users: usize,
    pub items: usize,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl EmbeddingTable {
    pub fn zeros(users: usize, items: usize, dim: usize) -> Self {
        EmbeddingTable {
            users,
            items,
            dim,
            values: vec![0.0; users * items * dim],
        }
    }

    pub fn get(&self, user: UserId, item: ItemId) -> &[f64] {
        let start = (user.0 * self.items + item.0) * self.dim;
        &self.values[start..start + self.dim]
    }

    pub fn get_mut(&mut self, user: UserId, item: ItemId) -> &mut [f64] {
        let start = (user.0 * self.items + item.0) * self.dim;
        &mut self.values[start..start + self.dim]
    }

    fn check_shape(&self, what: &str) -> Result<()> {
        if self.values.len() != self.users * self.items * self.dim {
            return Err(Error::config(format!(
                "{what} embedding table has {} values, expected {}x{}x{}",
                self.values.len(),
                self.users,
                self.items,
                self.dim
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(format!("{what} embeddings must be finite")));
        }
        Ok(())
    }
}

/// Count-proportional popularity: the transient bias of item `I` is
/// `min(α_0(I) · n_t(I), cap)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopularityDynamics {
    /// Per-item increment `α_0(I)`.
    pub alpha0: Vec<f64>,
    /// Upper bound on every cap `b_i(u, s)`.
    pub b_max: f64,
}

impl PopularityDynamics {
    pub fn uniform(corpus_size: usize, alpha: f64, b_max: f64) -> Self {
        PopularityDynamics {
            alpha0: vec![alpha; corpus_size],
            b_max,
        }
    }

    pub fn alpha_min(&self) -> f64 {
        self.alpha0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Selection count after which an item's bias has hit any cap `≤ b_max`.
    pub fn saturation_count(&self) -> f64 {
        self.b_max / self.alpha_min()
    }
}

/// What users derive value from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum UtilityMode {
    /// `μ ≡ q`.
    #[default]
    QualityOnly,
    /// `μ ≡ q + c · (transient popularity bias)`.
    QualityPlusPopularity { c: f64 },
}

/// Euclidean bounds on each position's parameter blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormBounds {
    pub quality: f64,
    pub popularity: f64,
}

impl Default for NormBounds {
    fn default() -> Self {
        NormBounds {
            quality: 1.0,
            popularity: 1.0,
        }
    }
}

impl NormBounds {
    /// `L = L_q + L_p`.
    pub fn total(&self) -> f64 {
        self.quality + self.popularity
    }
}

/// Serialized form of an [`EnvironmentInstance`]; validated on conversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceParts {
    pub corpus_size: usize,
    pub slate_size: usize,
    pub theta_star: Vec<Vec<f64>>,
    pub phi_star: Vec<Vec<f64>>,
    pub rank_bias: Vec<f64>,
    pub quality_embeddings: EmbeddingTable,
    pub popularity_embeddings: EmbeddingTable,
    pub dynamics: PopularityDynamics,
    #[serde(default)]
    pub utility: UtilityMode,
    #[serde(default)]
    pub norm_bounds: NormBounds,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Ground truth for one simulated world. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceParts", into = "InstanceParts")]
pub struct EnvironmentInstance {
    parts: InstanceParts,
}

impl TryFrom<InstanceParts> for EnvironmentInstance {
    type Error = Error;

    fn try_from(parts: InstanceParts) -> Result<Self> {
        EnvironmentInstance::from_parts(parts)
    }
}

impl From<EnvironmentInstance> for InstanceParts {
    fn from(env: EnvironmentInstance) -> Self {
        env.parts
    }
}

impl EnvironmentInstance {
    /// Validates every structural and boundedness invariant.
    pub fn from_parts(parts: InstanceParts) -> Result<Self> {
        let n = parts.corpus_size;
        let m = parts.slate_size;
        if n < 1 || m < 1 || m > n {
            return Err(Error::config(format!(
                "need 1 <= slate size ({m}) <= corpus size ({n})"
            )));
        }
        parts.quality_embeddings.check_shape("quality")?;
        parts.popularity_embeddings.check_shape("popularity")?;
        let users = parts.quality_embeddings.users;
        if users == 0 {
            return Err(Error::config("user population must be non-empty"));
        }
        for table in [&parts.quality_embeddings, &parts.popularity_embeddings] {
            if table.users != users || table.items != n {
                return Err(Error::config(
                    "embedding tables must cover the same users and the whole corpus",
                ));
            }
        }
        let dq = parts.quality_embeddings.dim * m;
        let dp = parts.popularity_embeddings.dim * m;
        if parts.quality_embeddings.dim == 0 {
            return Err(Error::config("quality dimension must be positive"));
        }
        check_params(&parts.theta_star, m, dq, parts.norm_bounds.quality, "theta")?;
        check_params(&parts.phi_star, m, dp, parts.norm_bounds.popularity, "phi")?;
        if parts.rank_bias.len() != m || parts.rank_bias.iter().any(|k| !(-1.0..=1.0).contains(k))
        {
            return Err(Error::config(format!(
                "rank bias must have {m} entries in [-1, 1]"
            )));
        }
        let dyn_ = &parts.dynamics;
        if dyn_.alpha0.len() != n || dyn_.alpha0.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::config(format!(
                "popularity increments must be {n} positive finite values"
            )));
        }
        if !(dyn_.b_max >= 0.0 && dyn_.b_max <= 1.0) {
            return Err(Error::config(format!(
                "b_max = {} must lie in [0, 1]",
                dyn_.b_max
            )));
        }
        if let UtilityMode::QualityPlusPopularity { c } = parts.utility {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::config("utility coefficient c must be >= 0"));
            }
        }
        let env = EnvironmentInstance { parts };
        env.check_ranges()?;
        Ok(env)
    }

    /// Interval bounds over all slates for every `(user, position)`:
    /// qualities within `[-1, 1]` and caps within `[0, b_max]`.
    fn check_ranges(&self) -> Result<()> {
        let m = self.slate_size();
        for u in 0..self.user_count() {
            let user = UserId(u);
            for i in 0..m {
                let (qlo, qhi) = self.block_range(&self.parts.quality_embeddings, user, &self.parts.theta_star[i]);
                if qlo < -1.0 - BOUND_SLACK || qhi > 1.0 + BOUND_SLACK {
                    return Err(Error::config(format!(
                        "quality of user {u} at position {} can reach [{qlo}, {qhi}]",
                        i + 1
                    )));
                }
                let (blo, bhi) = self.block_range(&self.parts.popularity_embeddings, user, &self.parts.phi_star[i]);
                if blo < -BOUND_SLACK || bhi > self.parts.dynamics.b_max + BOUND_SLACK {
                    return Err(Error::config(format!(
                        "popularity cap of user {u} at position {} can reach [{blo}, {bhi}], b_max = {}",
                        i + 1,
                        self.parts.dynamics.b_max
                    )));
                }
            }
        }
        Ok(())
    }

    fn block_range(&self, table: &EmbeddingTable, user: UserId, param: &[f64]) -> (f64, f64) {
        let d = table.dim;
        let mut lo = 0.0;
        let mut hi = 0.0;
        for block in param.chunks(d.max(1)).take(self.slate_size()) {
            if d == 0 {
                break;
            }
            let (mut bl, mut bh) = (f64::INFINITY, f64::NEG_INFINITY);
            for item in 0..self.corpus_size() {
                let v = dot(table.get(user, ItemId(item)), block);
                bl = bl.min(v);
                bh = bh.max(v);
            }
            lo += bl;
            hi += bh;
        }
        (lo, hi)
    }

    pub fn parts(&self) -> &InstanceParts {
        &self.parts
    }

    pub fn corpus_size(&self) -> usize {
        self.parts.corpus_size
    }

    pub fn slate_size(&self) -> usize {
        self.parts.slate_size
    }

    pub fn user_count(&self) -> usize {
        self.parts.quality_embeddings.users
    }

    /// Per-item quality embedding dimension.
    pub fn item_quality_dim(&self) -> usize {
        self.parts.quality_embeddings.dim
    }

    /// Per-item popularity embedding dimension.
    pub fn item_popularity_dim(&self) -> usize {
        self.parts.popularity_embeddings.dim
    }

    /// Slate-level quality dimension `M · d_q`.
    pub fn quality_dim(&self) -> usize {
        self.item_quality_dim() * self.slate_size()
    }

    /// Slate-level popularity dimension `M · d_p`.
    pub fn popularity_dim(&self) -> usize {
        self.item_popularity_dim() * self.slate_size()
    }

    pub fn rank_bias(&self) -> &[f64] {
        &self.parts.rank_bias
    }

    pub fn dynamics(&self) -> &PopularityDynamics {
        &self.parts.dynamics
    }

    pub fn utility(&self) -> UtilityMode {
        self.parts.utility
    }

    pub fn norm_bounds(&self) -> NormBounds {
        self.parts.norm_bounds
    }

    pub fn theta_star(&self) -> &[Vec<f64>] {
        &self.parts.theta_star
    }

    pub fn phi_star(&self) -> &[Vec<f64>] {
        &self.parts.phi_star
    }

    pub fn quality_embeddings(&self) -> &EmbeddingTable {
        &self.parts.quality_embeddings
    }

    pub fn popularity_embeddings(&self) -> &EmbeddingTable {
        &self.parts.popularity_embeddings
    }

    pub fn seed(&self) -> Option<u64> {
        self.parts.seed
    }

    /// Replaces the utility measure; everything else stays fixed.
    pub fn with_utility(mut self, utility: UtilityMode) -> Result<Self> {
        self.parts.utility = utility;
        Self::from_parts(self.parts)
    }

    pub(crate) fn check_slate(&self, slate: &Slate) -> Result<()> {
        if slate.len() != self.slate_size() {
            return Err(Error::invalid(format!(
                "slate of length {} for slate size {}",
                slate.len(),
                self.slate_size()
            )));
        }
        if let Some(item) = slate.items().iter().find(|i| i.0 >= self.corpus_size()) {
            return Err(Error::invalid(format!("unknown item {item}")));
        }
        Ok(())
    }

    /// Writes `x_q(u, s)` (length `M·d_q`) into `out`.
    pub fn quality_features_into(&self, user: UserId, slate: &Slate, out: &mut [f64]) {
        concat_features(&self.parts.quality_embeddings, user, slate, out);
    }

    /// Writes `x_p(u, s)` (length `M·d_p`) into `out`.
    pub fn popularity_features_into(&self, user: UserId, slate: &Slate, out: &mut [f64]) {
        concat_features(&self.parts.popularity_embeddings, user, slate, out);
    }

    /// True qualities `q_i(u, s) = x_q(u, s)ᵀ θ*_i`.
    pub fn quality(&self, user: UserId, slate: &Slate) -> Vec<f64> {
        let mut x = vec![0.0; self.quality_dim()];
        self.quality_features_into(user, slate, &mut x);
        self.parts.theta_star.iter().map(|t| dot(&x, t)).collect()
    }

    /// Saturated popularity caps `b_i(u, s) = x_p(u, s)ᵀ φ*_i`.
    pub fn caps(&self, user: UserId, slate: &Slate) -> Vec<f64> {
        let mut x = vec![0.0; self.popularity_dim()];
        self.popularity_features_into(user, slate, &mut x);
        self.parts.phi_star.iter().map(|p| dot(&x, p)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let parts: InstanceParts = serde_json::from_str(s)?;
        Self::from_parts(parts)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn check_params(params: &[Vec<f64>], m: usize, dim: usize, bound: f64, what: &str) -> Result<()> {
    if params.len() != m || params.iter().any(|p| p.len() != dim) {
        return Err(Error::config(format!(
            "{what}* must be {m} vectors of length {dim}"
        )));
    }
    for (i, p) in params.iter().enumerate() {
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(format!("{what}*_{} is not finite", i + 1)));
        }
        let norm = dot(p, p).sqrt();
        if norm > bound + 1e-12 {
            return Err(Error::config(format!(
                "|{what}*_{}| = {norm} exceeds its bound {bound}",
                i + 1
            )));
        }
    }
    Ok(())
}

fn concat_features(table: &EmbeddingTable, user: UserId, slate: &Slate, out: &mut [f64]) {
    let d = table.dim;
    debug_assert_eq!(out.len(), d * slate.len());
    for (chunk, &item) in out.chunks_mut(d.max(1)).zip(slate.items()) {
        if d > 0 {
            chunk.copy_from_slice(table.get(user, item));
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
