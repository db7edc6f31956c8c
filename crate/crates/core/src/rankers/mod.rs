//! The ranker interface and the non-learning policies.

mod enumerate;
mod popularity;
mod quality;
mod scoring;

pub use enumerate::{
    ordered_slate_count, slate_argmax, slate_argmax_enumerate, slate_argmax_position_greedy,
    DEFAULT_ENUMERATION_BUDGET,
};
pub use popularity::PopularityDrivenRanker;
pub use quality::QualityRanker;
pub(crate) use scoring::SlateScorer;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::environment::{EmbeddingTable, EnvironmentInstance, NormBounds, SelectionHistory};
use crate::error::{Error, Result};
use crate::slate::{Slate, UserId};

/// What a ranker may see of the world: corpus, users, embeddings and the
/// (known) rank bias. Ground-truth parameters stay hidden.
#[derive(Clone, Copy)]
pub struct ObservableView<'a> {
    env: &'a EnvironmentInstance,
}

impl<'a> ObservableView<'a> {
    pub fn new(env: &'a EnvironmentInstance) -> Self {
        ObservableView { env }
    }

    pub fn corpus_size(&self) -> usize {
        self.env.corpus_size()
    }

    pub fn slate_size(&self) -> usize {
        self.env.slate_size()
    }

    pub fn user_count(&self) -> usize {
        self.env.user_count()
    }

    pub fn rank_bias(&self) -> &'a [f64] {
        self.env.rank_bias()
    }

    pub fn quality_embeddings(&self) -> &'a EmbeddingTable {
        self.env.quality_embeddings()
    }

    pub fn popularity_embeddings(&self) -> &'a EmbeddingTable {
        self.env.popularity_embeddings()
    }

    pub fn quality_dim(&self) -> usize {
        self.env.quality_dim()
    }

    pub fn popularity_dim(&self) -> usize {
        self.env.popularity_dim()
    }

    pub fn alpha_min(&self) -> f64 {
        self.env.dynamics().alpha_min()
    }

    /// Norm bounds `L_q`, `L_p` on the parameter blocks (problem constants).
    pub fn norm_bounds(&self) -> NormBounds {
        self.env.norm_bounds()
    }

    /// False when every popularity embedding is zero.
    pub fn has_popularity_features(&self) -> bool {
        self.popularity_embeddings().values.iter().any(|&v| v != 0.0)
    }

    pub fn b_max(&self) -> f64 {
        self.env.dynamics().b_max
    }

    /// Slate embedding `x(u, s) = (x_q, x_p)`, or `x_q` alone.
    pub fn features(&self, user: UserId, slate: &Slate, with_popularity: bool) -> Vec<f64> {
        let dq = self.quality_dim();
        let dp = if with_popularity { self.popularity_dim() } else { 0 };
        let mut x = vec![0.0; dq + dp];
        self.env.quality_features_into(user, slate, &mut x[..dq]);
        if with_popularity {
            self.env.popularity_features_into(user, slate, &mut x[dq..]);
        }
        x
    }
}

/// A ranking policy `R: U × H_t → S`.
pub trait Ranker {
    fn name(&self) -> &'static str;

    /// Chooses the slate for `user` given the history of previous steps.
    fn select(
        &mut self,
        view: &ObservableView<'_>,
        history: &SelectionHistory,
        user: UserId,
    ) -> Result<Slate>;

    /// Feedback for the slate just shown; `history` does not include it yet.
    fn observe(
        &mut self,
        _view: &ObservableView<'_>,
        _history: &SelectionHistory,
        _user: UserId,
        _slate: &Slate,
        _choice: usize,
    ) -> Result<()> {
        Ok(())
    }
}

/// Ranker names accepted in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankerKind {
    Qp,
    Quality,
    PopularityDriven,
    Greedy,
    Oblivious,
}

impl RankerKind {
    pub const ALL: [RankerKind; 5] = [
        RankerKind::Qp,
        RankerKind::Quality,
        RankerKind::PopularityDriven,
        RankerKind::Greedy,
        RankerKind::Oblivious,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RankerKind::Qp => "qp",
            RankerKind::Quality => "quality",
            RankerKind::PopularityDriven => "popularity-driven",
            RankerKind::Greedy => "greedy",
            RankerKind::Oblivious => "oblivious",
        }
    }
}

impl fmt::Display for RankerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RankerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RankerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown ranker {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for kind in RankerKind::ALL {
            assert_eq!(kind.as_str().parse::<RankerKind>().unwrap(), kind);
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.as_str()));
        }
        assert!("ucb".parse::<RankerKind>().is_err());
    }
}
