use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ObservableView, Ranker};
use crate::environment::SelectionHistory;
use crate::error::Result;
use crate::slate::{Slate, UserId};

/// Shows the `M` most-selected items in decreasing order of selection count.
///
/// The first slate is uniformly random. Ties keep the previous slate's order,
/// then fall back to the smaller item index.
pub struct PopularityDrivenRanker {
    rng: ChaCha8Rng,
    previous: Option<Slate>,
    reranks: u64,
}

impl PopularityDrivenRanker {
    pub fn new(seed: u64) -> Self {
        PopularityDrivenRanker {
            rng: ChaCha8Rng::seed_from_u64(seed),
            previous: None,
            reranks: 0,
        }
    }

    /// Number of steps whose slate differed from the one before.
    pub fn reranks(&self) -> u64 {
        self.reranks
    }

    pub fn previous(&self) -> Option<&Slate> {
        self.previous.as_ref()
    }

    fn rank(&self, counts: &[u64], m: usize, previous: &Slate) -> Slate {
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by_key(|&i| {
            let pos = previous
                .items()
                .iter()
                .position(|it| it.0 == i)
                .unwrap_or(usize::MAX);
            (std::cmp::Reverse(counts[i]), pos, i)
        });
        Slate::from_indices_unchecked(&order[..m])
    }
}

impl Ranker for PopularityDrivenRanker {
    fn name(&self) -> &'static str {
        "popularity-driven"
    }

    fn select(&mut self, view: &ObservableView<'_>, history: &SelectionHistory, _user: UserId) -> Result<Slate> {
        let m = view.slate_size();
        let slate = match &self.previous {
            None => {
                let idx = sample(&mut self.rng, view.corpus_size(), m).into_vec();
                Slate::from_indices_unchecked(&idx)
            }
            Some(prev) => {
                let next = self.rank(history.selection_counts(), m, prev);
                if &next != prev {
                    self.reranks += 1;
                }
                next
            }
        };
        self.previous = Some(slate.clone());
        Ok(slate)
    }
}
