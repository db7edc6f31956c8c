use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::environment::{env_step, make_synthetic_instance, EnvironmentInstance, GeneratorConfig, SelectionHistory};
use crate::error::{Error, Result};
use crate::rankers::{ObservableView, PopularityDrivenRanker, Ranker};
use crate::slate::{Slate, UserId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LockInConfig {
    pub generator: GeneratorConfig,
    pub steps: usize,
    /// When false, users choose by rank bias alone; qualities only label items.
    pub quality_in_choice: bool,
}

impl Default for LockInConfig {
    fn default() -> Self {
        LockInConfig {
            generator: GeneratorConfig {
                users: 1,
                ..GeneratorConfig::default()
            },
            steps: 5000,
            quality_in_choice: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockInRun {
    pub seed: u64,
    pub final_slate: Slate,
    /// Item qualities for user 0 at position 1.
    pub qualities: Vec<f64>,
    /// Quality rank (0 = best) of the item ending at the top.
    pub top_rank: usize,
    pub lucky: bool,
    pub unlucky: bool,
    pub selections: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockInSummary {
    pub lucky_fraction: f64,
    pub unlucky_fraction: f64,
    /// How many different quality ranks end at the top across seeds.
    pub distinct_top_ranks: usize,
    pub runs: Vec<LockInRun>,
}

fn rank_bias_only(env: &EnvironmentInstance) -> Result<EnvironmentInstance> {
    let mut parts = env.parts().clone();
    parts.theta_star.iter_mut().flatten().for_each(|v| *v = 0.0);
    parts.phi_star.iter_mut().flatten().for_each(|v| *v = 0.0);
    EnvironmentInstance::from_parts(parts)
}

/// Runs the popularity-driven ranker once per seed on a fresh world and
/// records which item ends at the top. Lucky: that item's quality is above
/// the corpus median; unlucky: below it.
pub fn lock_in_experiment(config: &LockInConfig, seeds: &[u64]) -> Result<LockInSummary> {
    if seeds.is_empty() {
        return Err(Error::invalid("need at least one seed"));
    }
    let runs = seeds
        .iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let labeled = make_synthetic_instance(&config.generator, &mut rng)?;
            let env = if config.quality_in_choice {
                labeled.clone()
            } else {
                rank_bias_only(&labeled)?
            };
            let n = env.corpus_size();
            let qualities: Vec<f64> = (0..n)
                .map(|i| {
                    let mut ids: Vec<usize> = (0..n).filter(|&j| j != i).take(env.slate_size() - 1).collect();
                    ids.insert(0, i);
                    labeled.quality(UserId(0), &Slate::from_indices_unchecked(&ids))[0]
                })
                .collect();
            let view = ObservableView::new(&env);
            let mut ranker = PopularityDrivenRanker::new(seed.wrapping_add(1));
            let mut h = SelectionHistory::new(n);
            let mut slate = None;
            for _ in 0..config.steps {
                let user = crate::environment::sample_user(&env, &mut rng);
                let s = ranker.select(&view, &h, user)?;
                env_step(&env, &mut h, user, s.clone(), &mut rng)?;
                slate = Some(s);
            }
            let final_slate = slate.ok_or_else(|| Error::invalid("need at least one step"))?;
            let top = final_slate.at_position(1).0;
            let mut sorted = qualities.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let median = 0.5 * (sorted[(n - 1) / 2] + sorted[n / 2]);
            let top_rank = sorted.iter().position(|&q| q == qualities[top]).expect("present");
            Ok(LockInRun {
                seed,
                top_rank,
                lucky: qualities[top] > median,
                unlucky: qualities[top] < median,
                selections: h.selection_counts().to_vec(),
                final_slate,
                qualities,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = runs.len() as f64;
    let mut ranks: Vec<usize> = runs.iter().map(|r| r.top_rank).collect();
    ranks.sort_unstable();
    ranks.dedup();
    Ok(LockInSummary {
        lucky_fraction: runs.iter().filter(|r| r.lucky).count() as f64 / k,
        unlucky_fraction: runs.iter().filter(|r| r.unlucky).count() as f64 / k,
        distinct_top_ranks: ranks.len(),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_outcomes_occur() {
        let cfg = LockInConfig {
            steps: 500,
            ..LockInConfig::default()
        };
        let seeds: Vec<u64> = (0..40).collect();
        let s = lock_in_experiment(&cfg, &seeds).unwrap();
        assert!(s.lucky_fraction > 0.0 && s.unlucky_fraction > 0.0);
        assert!(s.distinct_top_ranks > 2);
    }
}
