use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::choice::softmax_into;
use crate::environment::{
    env_step, EmbeddingTable, EnvironmentInstance, InstanceParts, NormBounds, PopularityDynamics,
    SelectionHistory, UtilityMode,
};
use crate::error::{Error, Result};
use crate::rankers::{ObservableView, PopularityDrivenRanker, Ranker};
use crate::slate::UserId;

/// Two items, two positions, users driven only by rank bias `κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoItemWalkConfig {
    pub kappa: [f64; 2],
}

impl TwoItemWalkConfig {
    /// Selection probabilities `(p, q)` of positions 1 and 2.
    pub fn probabilities(&self) -> (f64, f64) {
        let mut z = [0.0; 2];
        softmax_into(&self.kappa, &mut z);
        (z[0], z[1])
    }

    /// The upper bound `p / (p − q²)` on the expected number of reranks.
    pub fn rerank_bound(&self) -> f64 {
        let (p, q) = self.probabilities();
        p / (p - q * q)
    }

    pub fn instance(&self) -> Result<EnvironmentInstance> {
        EnvironmentInstance::from_parts(InstanceParts {
            corpus_size: 2,
            slate_size: 2,
            theta_star: vec![vec![0.0; 2], vec![0.0; 2]],
            phi_star: vec![vec![], vec![]],
            rank_bias: self.kappa.to_vec(),
            quality_embeddings: EmbeddingTable::zeros(1, 2, 1),
            popularity_embeddings: EmbeddingTable::zeros(1, 2, 0),
            dynamics: PopularityDynamics::uniform(2, 1.0, 0.0),
            utility: UtilityMode::QualityOnly,
            norm_bounds: NormBounds::default(),
            seed: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkRun {
    pub seed: u64,
    pub position_shares: [f64; 2],
    pub no_click_share: f64,
    pub reranks: u64,
    /// Reranks during the second half of the run.
    pub late_reranks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkSummary {
    pub p: f64,
    pub q: f64,
    pub steps: usize,
    /// Mean share of steps selecting position 1 (`π̂₁`) and position 2 (`π̂₂`).
    pub pi1: f64,
    pub pi2: f64,
    pub mean_reranks: f64,
    pub rerank_se: f64,
    pub rerank_bound: f64,
    /// Fraction of seeds with no rerank in the second half.
    pub frozen_fraction: f64,
    pub runs: Vec<WalkRun>,
}

/// Runs the popularity-driven ranker on the two-item walk for each seed.
pub fn rank_size_empirical(walk: &TwoItemWalkConfig, steps: usize, seeds: &[u64]) -> Result<WalkSummary> {
    if seeds.is_empty() || steps == 0 {
        return Err(Error::invalid("need at least one seed and one step"));
    }
    let env = walk.instance()?;
    let view = ObservableView::new(&env);
    let runs = seeds
        .iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ranker = PopularityDrivenRanker::new(seed ^ 0x9e37_79b9_7f4a_7c15);
            let mut h = SelectionHistory::new(2);
            let mut counts = [0u64; 3];
            let mut late = 0;
            let mut prev = None;
            for t in 0..steps {
                let slate = ranker.select(&view, &h, UserId(0))?;
                if prev.as_ref().is_some_and(|p| *p != slate) && t >= steps / 2 {
                    late += 1;
                }
                prev = Some(slate.clone());
                let c = env_step(&env, &mut h, UserId(0), slate, &mut rng)?;
                counts[c] += 1;
            }
            let n = steps as f64;
            Ok(WalkRun {
                seed,
                position_shares: [counts[1] as f64 / n, counts[2] as f64 / n],
                no_click_share: counts[0] as f64 / n,
                reranks: ranker.reranks(),
                late_reranks: late,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = runs.len() as f64;
    let mean = |f: &dyn Fn(&WalkRun) -> f64| runs.iter().map(f).sum::<f64>() / k;
    let mean_reranks = mean(&|r| r.reranks as f64);
    let var = runs.iter().map(|r| (r.reranks as f64 - mean_reranks).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
    let (p, q) = walk.probabilities();
    Ok(WalkSummary {
        p,
        q,
        steps,
        pi1: mean(&|r| r.position_shares[0]),
        pi2: mean(&|r| r.position_shares[1]),
        mean_reranks,
        rerank_se: (var / k).sqrt(),
        rerank_bound: walk.rerank_bound(),
        frozen_fraction: runs.iter().filter(|r| r.late_reranks == 0).count() as f64 / k,
        runs,
    })
}
