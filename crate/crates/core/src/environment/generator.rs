use rand::Rng;
use serde::{Deserialize, Serialize};

use super::instance::{
    dot, EmbeddingTable, EnvironmentInstance, InstanceParts, NormBounds, PopularityDynamics,
    UtilityMode,
};
use crate::error::{Error, Result};
use crate::slate::{ItemId, UserId};

/// Parameters of the synthetic world generator. Dimensions are per item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub corpus_size: usize,
    pub slate_size: usize,
    pub quality_dim: usize,
    pub popularity_dim: usize,
    pub alpha_min: f64,
    pub b_max: f64,
    pub users: usize,
    /// Defaults to a linear ramp from 0.5 at the top position down to 0.
    pub rank_bias: Option<Vec<f64>>,
    pub utility: UtilityMode,
    /// Caps depend on the whole slate rather than on the (user, item) pair.
    pub slate_dependent_caps: bool,
    /// When false, popularity embeddings and `φ*` are identically zero.
    pub popularity_features: bool,
    /// Known bounds `L_q`, `L_p`; when absent, the smallest bounds the sampled
    /// parameters satisfy.
    pub norm_bounds: Option<NormBounds>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            corpus_size: 10,
            slate_size: 3,
            quality_dim: 8,
            popularity_dim: 8,
            alpha_min: 0.02,
            b_max: 0.2,
            users: 128,
            rank_bias: None,
            utility: UtilityMode::QualityOnly,
            slate_dependent_caps: false,
            popularity_features: true,
            norm_bounds: None,
        }
    }
}

/// `κ_i = 0.5 · (M - i) / (M - 1)` for positions `i = 1..M`; zero when `M = 1`.
pub fn default_rank_bias(slate_size: usize) -> Vec<f64> {
    if slate_size <= 1 {
        return vec![0.0; slate_size];
    }
    (0..slate_size)
        .map(|i| 0.5 * (slate_size - 1 - i) as f64 / (slate_size - 1) as f64)
        .collect()
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.corpus_size < 2 {
            return Err(Error::config("corpus must hold at least two items"));
        }
        if self.slate_size < 1 || self.slate_size > self.corpus_size {
            return Err(Error::config(format!(
                "slate size {} must be in 1..={}",
                self.slate_size, self.corpus_size
            )));
        }
        if self.quality_dim == 0 || self.popularity_dim == 0 {
            return Err(Error::config("embedding dimensions must be positive"));
        }
        if self.users == 0 {
            return Err(Error::config("user population must be non-empty"));
        }
        if !(self.alpha_min > 0.0 && self.alpha_min.is_finite()) {
            return Err(Error::config("alpha_min must be positive"));
        }
        if !(self.b_max > 0.0 && self.b_max <= 1.0) {
            return Err(Error::config("b_max must lie in (0, 1]"));
        }
        if let Some(k) = &self.rank_bias {
            if k.len() != self.slate_size {
                return Err(Error::config(format!(
                    "rank_bias has {} entries for slate size {}",
                    k.len(),
                    self.slate_size
                )));
            }
        }
        Ok(())
    }
}

fn uniform_vec<R: Rng + ?Sized>(rng: &mut R, len: usize, hi: f64) -> Vec<f64> {
    (0..len).map(|_| hi * rng.random::<f64>()).collect()
}

/// Samples a world: parameters and per-(user, item) embeddings i.i.d.
/// uniform on `[0, 1/√d]^d`, quality parameters shared by every position, and
/// popularity parameters rescaled so the largest reachable cap equals `b_max`.
pub fn make_synthetic_instance<R: Rng + ?Sized>(
    config: &GeneratorConfig,
    rng: &mut R,
) -> Result<EnvironmentInstance> {
    config.validate()?;
    let n = config.corpus_size;
    let m = config.slate_size;
    let dq = config.quality_dim;
    let dp = config.popularity_dim;
    let hq = 1.0 / (dq as f64).sqrt();
    let hp = 1.0 / (dp as f64).sqrt();

    let theta_item = uniform_vec(rng, dq, hq);
    let phi_raw: Vec<Vec<f64>> = if config.slate_dependent_caps {
        let h = 1.0 / ((m * dp) as f64).sqrt();
        (0..m).map(|_| uniform_vec(rng, m * dp, h)).collect()
    } else {
        let phi_item = uniform_vec(rng, dp, hp);
        (0..m).map(|i| place_block(&phi_item, i, m)).collect()
    };

    let mut quality = EmbeddingTable::zeros(config.users, n, dq);
    let mut popularity = EmbeddingTable::zeros(config.users, n, dp);
    for u in 0..config.users {
        for item in 0..n {
            let (user, item) = (UserId(u), ItemId(item));
            for v in quality.get_mut(user, item) {
                *v = hq * rng.random::<f64>();
            }
            for v in popularity.get_mut(user, item) {
                *v = hp * rng.random::<f64>();
            }
        }
    }

    let theta_star: Vec<Vec<f64>> = (0..m).map(|i| place_block(&theta_item, i, m)).collect();
    let phi_star = if config.popularity_features {
        let peak = max_cap(&popularity, &phi_raw, m);
        if peak <= 0.0 {
            return Err(Error::config("sampled popularity caps are all zero"));
        }
        let scale = config.b_max / peak;
        phi_raw
            .iter()
            .map(|p| p.iter().map(|v| v * scale).collect())
            .collect()
    } else {
        popularity.values.iter_mut().for_each(|v| *v = 0.0);
        vec![vec![0.0; m * dp]; m]
    };

    let norm_bounds = config
        .norm_bounds
        .unwrap_or_else(|| tight_bounds(&theta_star, &phi_star));
    let parts = InstanceParts {
        corpus_size: n,
        slate_size: m,
        theta_star,
        phi_star,
        rank_bias: config
            .rank_bias
            .clone()
            .unwrap_or_else(|| default_rank_bias(m)),
        quality_embeddings: quality,
        popularity_embeddings: popularity,
        dynamics: PopularityDynamics::uniform(n, config.alpha_min, config.b_max),
        utility: config.utility,
        norm_bounds,
        seed: None,
    };
    EnvironmentInstance::from_parts(parts).map_err(|e| match e {
        Error::Config(msg) => Error::config(format!("infeasible bounds: {msg}")),
        other => other,
    })
}

/// Vector of length `m · block.len()` with `block` at slot `slot`.
fn place_block(block: &[f64], slot: usize, m: usize) -> Vec<f64> {
    let d = block.len();
    let mut out = vec![0.0; m * d];
    out[slot * d..(slot + 1) * d].copy_from_slice(block);
    out
}

fn tight_bounds(theta: &[Vec<f64>], phi: &[Vec<f64>]) -> NormBounds {
    let largest = |blocks: &[Vec<f64>]| {
        blocks
            .iter()
            .map(|b| b.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    };
    // slack so the sampled parameters pass the bound check after rounding
    NormBounds {
        quality: largest(theta) * (1.0 + 1e-12),
        popularity: largest(phi) * (1.0 + 1e-12),
    }
}

/// Upper bound over users, slates and positions of `x_p(u, s)ᵀ φ_i`.
fn max_cap(table: &EmbeddingTable, phi: &[Vec<f64>], m: usize) -> f64 {
    let d = table.dim;
    let mut peak: f64 = 0.0;
    for u in 0..table.users {
        for p in phi {
            let bound: f64 = p
                .chunks(d)
                .take(m)
                .map(|block| {
                    (0..table.items)
                        .map(|item| dot(table.get(UserId(u), ItemId(item)), block))
                        .fold(0.0_f64, f64::max)
                })
                .sum();
            peak = peak.max(bound);
        }
    }
    peak
}
