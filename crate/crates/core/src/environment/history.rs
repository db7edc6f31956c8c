use serde::{Deserialize, Serialize};

use crate::slate::{ItemId, Slate, UserId};

/// One round of interaction: who was served, what they saw, what they chose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub user: UserId,
    pub slate: Slate,
    /// `0` for no click, otherwise the 1-based position selected.
    pub choice: usize,
}

impl Interaction {
    pub fn selected_item(&self) -> Option<ItemId> {
        (self.choice > 0).then(|| self.slate.at_position(self.choice))
    }
}

/// Selection and presentation counts plus the full interaction log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionHistory {
    selections: Vec<u64>,
    presented: Vec<u64>,
    no_clicks: u64,
    log: Vec<Interaction>,
}

impl SelectionHistory {
    pub fn new(corpus_size: usize) -> Self {
        SelectionHistory {
            selections: vec![0; corpus_size],
            presented: vec![0; corpus_size],
            no_clicks: 0,
            log: Vec::new(),
        }
    }

    /// `n_t(I)`: selections of `item` over all recorded steps.
    pub fn selections(&self, item: ItemId) -> u64 {
        self.selections[item.0]
    }

    pub fn selection_counts(&self) -> &[u64] {
        &self.selections
    }

    /// Number of slates `item` appeared in.
    pub fn presented(&self, item: ItemId) -> u64 {
        self.presented[item.0]
    }

    pub fn presentation_counts(&self) -> &[u64] {
        &self.presented
    }

    pub fn no_clicks(&self) -> u64 {
        self.no_clicks
    }

    /// Number of recorded steps (`t - 1` while choosing the slate for step `t`).
    pub fn steps(&self) -> usize {
        self.log.len()
    }

    pub fn corpus_size(&self) -> usize {
        self.selections.len()
    }

    pub fn log(&self) -> &[Interaction] {
        &self.log
    }

    pub fn last(&self) -> Option<&Interaction> {
        self.log.last()
    }

    pub fn record(&mut self, user: UserId, slate: Slate, choice: usize) {
        debug_assert!(choice <= slate.len());
        for item in slate.items() {
            self.presented[item.0] += 1;
        }
        if choice == 0 {
            self.no_clicks += 1;
        } else {
            self.selections[slate.at_position(choice).0] += 1;
        }
        self.log.push(Interaction {
            user,
            slate,
            choice,
        });
    }
}
