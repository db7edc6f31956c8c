use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::environment::{
    choice_probabilities, env_step, EmbeddingTable, EnvironmentInstance, InstanceParts, NormBounds,
    PopularityDynamics, SelectionHistory, UtilityMode,
};
use crate::error::{Error, Result};
use crate::slate::{ItemId, Slate, UserId};

/// Factor applied to quality and caps so every bias stays within `[-1, 1]`.
pub const PAIR_RESCALE: f64 = 0.5;
/// Rank bias restoring the saturated disposition to 1 after the rescale.
pub const PAIR_RANK_BIAS: f64 = 0.5;

/// Two single-position, two-item worlds whose saturated choice
/// probabilities coincide although their qualities have opposite signs.
#[derive(Debug, Clone, PartialEq)]
pub struct NonidentifiablePair {
    pub first: EnvironmentInstance,
    pub second: EnvironmentInstance,
    pub epsilon: f64,
}

/// Problem 1 has `θ* = ε` with caps `1 − ε`, `1 + ε`; Problem 2 mirrors it.
/// Both are scaled by [`PAIR_RESCALE`] and shifted by [`PAIR_RANK_BIAS`], so
/// every item saturates at disposition `1`.
pub fn build_nonidentifiable_pair(epsilon: f64, alpha_min: f64) -> Result<NonidentifiablePair> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::invalid(format!("ε must lie in [0, 1], got {epsilon}")));
    }
    if !(alpha_min > 0.0) {
        return Err(Error::invalid("α_min must be positive"));
    }
    let make = |sign: f64| -> Result<EnvironmentInstance> {
        let mut xq = EmbeddingTable::zeros(1, 2, 1);
        xq.values.copy_from_slice(&[PAIR_RESCALE, -PAIR_RESCALE]);
        let mut xp = EmbeddingTable::zeros(1, 2, 1);
        xp.values
            .copy_from_slice(&[PAIR_RESCALE * (1.0 - sign * epsilon), PAIR_RESCALE * (1.0 + sign * epsilon)]);
        EnvironmentInstance::from_parts(InstanceParts {
            corpus_size: 2,
            slate_size: 1,
            theta_star: vec![vec![sign * epsilon]],
            phi_star: vec![vec![1.0]],
            rank_bias: vec![PAIR_RANK_BIAS],
            quality_embeddings: xq,
            popularity_embeddings: xp,
            dynamics: PopularityDynamics::uniform(2, alpha_min, PAIR_RESCALE * (1.0 + epsilon)),
            utility: UtilityMode::QualityOnly,
            norm_bounds: NormBounds::default(),
            seed: None,
        })
    };
    Ok(NonidentifiablePair {
        first: make(1.0)?,
        second: make(-1.0)?,
        epsilon,
    })
}

/// What the two worlds look like once saturated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonidentReport {
    pub epsilon: f64,
    pub rescale: f64,
    pub rank_bias: f64,
    /// `e/(1+e)`.
    pub model_rate: f64,
    /// Exact click probability per item once saturated, for each problem.
    pub exact: [[f64; 2]; 2],
    /// Warm-up steps each problem needed before both items saturated.
    pub warmup_steps: [usize; 2],
    /// Empirical click rate per item over the measured steps.
    pub empirical: [[f64; 2]; 2],
    pub steps: usize,
}

/// Shows the two items alternately until both saturate, then for `steps`
/// more steps, recording click rates per item.
pub fn nonidentifiability_demo(pair: &NonidentifiablePair, steps: usize, seed: u64) -> Result<NonidentReport> {
    let mut exact = [[0.0; 2]; 2];
    let mut empirical = [[0.0; 2]; 2];
    let mut warmup_steps = [0; 2];
    for (k, env) in [&pair.first, &pair.second].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let mut h = SelectionHistory::new(2);
        let caps: Vec<f64> = (0..2)
            .map(|i| env.caps(UserId(0), &Slate::from_indices_unchecked(&[i]))[0])
            .collect();
        let alpha = &env.dynamics().alpha0;
        let saturated =
            |h: &SelectionHistory| (0..2).all(|i| alpha[i] * h.selections(ItemId(i)) as f64 >= caps[i]);
        let mut t = 0;
        while !saturated(&h) {
            env_step(env, &mut h, UserId(0), Slate::from_indices_unchecked(&[t % 2]), &mut rng)?;
            t += 1;
        }
        warmup_steps[k] = t;
        for i in 0..2 {
            let (z, _) = choice_probabilities(env, &h, UserId(0), &Slate::from_indices_unchecked(&[i]))?;
            exact[k][i] = z[0];
        }
        let mut clicks = [0usize; 2];
        let mut shown = [0usize; 2];
        for s in 0..steps {
            let i = s % 2;
            shown[i] += 1;
            if env_step(env, &mut h, UserId(0), Slate::from_indices_unchecked(&[i]), &mut rng)? == 1 {
                clicks[i] += 1;
            }
        }
        for i in 0..2 {
            empirical[k][i] = clicks[i] as f64 / shown[i].max(1) as f64;
        }
    }
    let e = 1f64.exp();
    Ok(NonidentReport {
        epsilon: pair.epsilon,
        rescale: PAIR_RESCALE,
        rank_bias: PAIR_RANK_BIAS,
        model_rate: e / (1.0 + e),
        exact,
        warmup_steps,
        empirical,
        steps,
    })
}
