//! Ground truth, popularity dynamics and the per-step interaction.

mod generator;
mod history;
mod instance;

pub use generator::{default_rank_bias, make_synthetic_instance, GeneratorConfig};
pub use history::{Interaction, SelectionHistory};
pub use instance::{
    EmbeddingTable, EnvironmentInstance, InstanceParts, NormBounds, PopularityDynamics,
    UtilityMode,
};

pub(crate) use instance::dot;

use rand::Rng;

use crate::choice::{sample_index, softmax_into, BiasTriple};
use crate::error::Result;
use crate::slate::{Slate, UserId};

/// Transient popularity bias `min(α_0(I_i) · n_t(I_i), b_i(u, s))` per position.
pub fn popularity_bias_value(
    env: &EnvironmentInstance,
    history: &SelectionHistory,
    user: UserId,
    slate: &Slate,
) -> Result<Vec<f64>> {
    env.check_slate(slate)?;
    let caps = env.caps(user, slate);
    let alpha = &env.dynamics().alpha0;
    Ok(slate
        .items()
        .iter()
        .zip(caps)
        .map(|(item, cap)| (alpha[item.0] * history.selections(*item) as f64).min(cap))
        .collect())
}

/// Quality, transient popularity and rank bias of a slate at the current state.
pub fn bias_triple(
    env: &EnvironmentInstance,
    history: &SelectionHistory,
    user: UserId,
    slate: &Slate,
) -> Result<BiasTriple> {
    Ok(BiasTriple {
        popularity: popularity_bias_value(env, history, user, slate)?,
        quality: env.quality(user, slate),
        rank: env.rank_bias().to_vec(),
    })
}

/// Selection probabilities `(z_1..z_M, z_0)` for the current state.
pub fn choice_probabilities(
    env: &EnvironmentInstance,
    history: &SelectionHistory,
    user: UserId,
    slate: &Slate,
) -> Result<(Vec<f64>, f64)> {
    let bias = bias_triple(env, history, user, slate)?;
    let delta = crate::choice::disposition(&bias)?;
    let mut z = vec![0.0; slate.len()];
    let z0 = softmax_into(delta.values(), &mut z);
    Ok((z, z0))
}

/// Draws a user uniformly from the finite population.
pub fn sample_user<R: Rng + ?Sized>(env: &EnvironmentInstance, rng: &mut R) -> UserId {
    UserId(rng.random_range(0..env.user_count()))
}

/// Samples the user's choice on `slate` without touching the history.
pub fn sample_choice_for<R: Rng + ?Sized>(
    env: &EnvironmentInstance,
    history: &SelectionHistory,
    user: UserId,
    slate: &Slate,
    rng: &mut R,
) -> Result<usize> {
    let (z, _) = choice_probabilities(env, history, user, slate)?;
    Ok(sample_index(&z, rng))
}

/// One interaction: samples the choice on `slate` and appends it to `history`.
pub fn env_step<R: Rng + ?Sized>(
    env: &EnvironmentInstance,
    history: &mut SelectionHistory,
    user: UserId,
    slate: Slate,
    rng: &mut R,
) -> Result<usize> {
    let choice = sample_choice_for(env, history, user, &slate, rng)?;
    history.record(user, slate, choice);
    Ok(choice)
}

/// Exact expected utility `Σ_i μ_i z_i(δ)` of showing `slate` to `user` now.
pub fn expected_instantaneous_value(
    env: &EnvironmentInstance,
    history: &SelectionHistory,
    user: UserId,
    slate: &Slate,
) -> Result<f64> {
    let bias = bias_triple(env, history, user, slate)?;
    let delta = crate::choice::disposition(&bias)?;
    let mut z = vec![0.0; slate.len()];
    softmax_into(delta.values(), &mut z);
    let value = match env.utility() {
        UtilityMode::QualityOnly => bias.quality.iter().zip(&z).map(|(q, p)| q * p).sum(),
        UtilityMode::QualityPlusPopularity { c } => bias
            .quality
            .iter()
            .zip(&bias.popularity)
            .zip(&z)
            .map(|((q, b), p)| (q + c * b) * p)
            .sum(),
    };
    Ok(value)
}
