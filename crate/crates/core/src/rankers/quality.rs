use std::collections::HashMap;
use std::sync::Arc;

use super::{slate_argmax, ObservableView, Ranker, SlateScorer, DEFAULT_ENUMERATION_BUDGET};
use crate::environment::{EnvironmentInstance, SelectionHistory, UtilityMode};
use crate::error::Result;
use crate::slate::{Slate, UserId};

/// Oracle reference: knows the ground truth and shows, for each user, the
/// slate maximizing the saturated value `Σ_i μ_i z_i(q + b + κ)`.
///
/// The objective does not depend on the history, so slates are cached per user.
pub struct QualityRanker {
    env: Arc<EnvironmentInstance>,
    budget: u64,
    cache: HashMap<UserId, Slate>,
}

impl QualityRanker {
    pub fn new(env: Arc<EnvironmentInstance>) -> Self {
        QualityRanker {
            env,
            budget: DEFAULT_ENUMERATION_BUDGET,
            cache: HashMap::new(),
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn best_slate(&mut self, user: UserId) -> Result<Slate> {
        if let Some(s) = self.cache.get(&user) {
            return Ok(s.clone());
        }
        let env = &self.env;
        let scorer = SlateScorer::build(
            env.quality_embeddings(),
            env.popularity_embeddings(),
            user,
            env.theta_star(),
            env.phi_star(),
        );
        let c = match env.utility() {
            UtilityMode::QualityOnly => 0.0,
            UtilityMode::QualityPlusPopularity { c } => c,
        };
        let kappa = env.rank_bias();
        let slate = slate_argmax(env.corpus_size(), env.slate_size(), self.budget, |s| {
            scorer.saturated_value(s, kappa, c)
        })?;
        self.cache.insert(user, slate.clone());
        Ok(slate)
    }
}

impl Ranker for QualityRanker {
    fn name(&self) -> &'static str {
        "quality"
    }

    fn select(&mut self, _view: &ObservableView<'_>, _history: &SelectionHistory, user: UserId) -> Result<Slate> {
        self.best_slate(user)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{
        EmbeddingTable, InstanceParts, NormBounds, PopularityDynamics,
    };

    #[test]
    fn picks_best_items_in_order() {
        // M = 2, scalar item quality embedding, θ*_i reads slot i.
        let q = [0.1, 0.9, -0.5, 0.6];
        let mut qe = EmbeddingTable::zeros(1, 4, 1);
        qe.values.copy_from_slice(&q);
        let env = EnvironmentInstance::from_parts(InstanceParts {
            corpus_size: 4,
            slate_size: 2,
            theta_star: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            phi_star: vec![vec![], vec![]],
            rank_bias: vec![0.5, 0.0],
            quality_embeddings: qe,
            popularity_embeddings: EmbeddingTable::zeros(1, 4, 0),
            dynamics: PopularityDynamics::uniform(4, 0.02, 0.2),
            utility: UtilityMode::QualityOnly,
            norm_bounds: NormBounds::default(),
            seed: None,
        })
        .unwrap();
        let mut r = QualityRanker::new(Arc::new(env));
        let s = r.best_slate(UserId(0)).unwrap();
        assert_eq!(s.joined(), "1;3");
    }
}
