use std::collections::HashMap;

use super::ParamLayout;
use crate::environment::Interaction;
use crate::error::{Error, Result};
use crate::slate::{Slate, UserId};

/// All admitted records sharing one `(user, slate)`: they share `x(u, s)`,
/// so the likelihood only needs the per-choice counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordGroup {
    pub user: UserId,
    pub slate: Slate,
    pub x: Vec<f64>,
    /// Index 0 counts no-clicks, index `i` clicks on position `i`.
    pub counts: Vec<f64>,
    pub total: f64,
}

/// One admitted record and the step at which it happened.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittedRecord {
    pub step: usize,
    pub interaction: Interaction,
}

/// The records the learner fits: only steps whose slate items had all
/// reached the saturation threshold `τ`.
#[derive(Debug, Clone)]
pub struct FilteredHistory {
    layout: ParamLayout,
    rank_bias: Vec<f64>,
    tau_min: f64,
    records: Vec<AdmittedRecord>,
    groups: Vec<RecordGroup>,
    index: HashMap<(UserId, Slate), usize>,
}

impl FilteredHistory {
    pub fn new(layout: ParamLayout, rank_bias: Vec<f64>, tau_min: f64) -> Self {
        assert_eq!(rank_bias.len(), layout.slate_size, "one rank bias per position");
        FilteredHistory {
            layout,
            rank_bias,
            tau_min,
            records: Vec::new(),
            groups: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Whether every item of `slate` has at least `tau` selections.
    pub fn gate_open(selection_counts: &[u64], slate: &Slate, tau: f64) -> bool {
        slate.items().iter().all(|i| selection_counts[i.0] as f64 >= tau)
    }

    /// Appends a record with its slate embedding. The caller checks the gate.
    pub fn admit(&mut self, step: usize, user: UserId, slate: Slate, choice: usize, x: Vec<f64>) -> Result<()> {
        if x.len() != self.layout.block_dim() {
            return Err(Error::invalid(format!(
                "embedding of length {}, model expects {}",
                x.len(),
                self.layout.block_dim()
            )));
        }
        if choice > self.layout.slate_size {
            return Err(Error::invalid(format!("choice {choice} outside 0..={}", self.layout.slate_size)));
        }
        let key = (user, slate.clone());
        let g = match self.index.get(&key) {
            Some(&g) => g,
            None => {
                self.groups.push(RecordGroup {
                    user,
                    slate: slate.clone(),
                    x,
                    counts: vec![0.0; self.layout.slate_size + 1],
                    total: 0.0,
                });
                self.index.insert(key, self.groups.len() - 1);
                self.groups.len() - 1
            }
        };
        self.groups[g].counts[choice] += 1.0;
        self.groups[g].total += 1.0;
        self.records.push(AdmittedRecord {
            step,
            interaction: Interaction { user, slate, choice },
        });
        Ok(())
    }

    pub fn layout(&self) -> ParamLayout {
        self.layout
    }

    pub fn rank_bias(&self) -> &[f64] {
        &self.rank_bias
    }

    pub fn tau_min(&self) -> f64 {
        self.tau_min
    }

    pub fn records(&self) -> &[AdmittedRecord] {
        &self.records
    }

    pub fn groups(&self) -> &[RecordGroup] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Replays the raw log and checks that every admitted record met the gate
    /// at its step. Returns the offending step on failure.
    pub fn audit(&self, raw_log: &[Interaction], corpus_size: usize) -> Result<()> {
        let mut counts = vec![0u64; corpus_size];
        let mut next = self.records.iter().peekable();
        for (step, rec) in raw_log.iter().enumerate() {
            while let Some(r) = next.peek() {
                if r.step != step {
                    break;
                }
                if r.interaction != *rec {
                    return Err(Error::invalid(format!("admitted record at step {step} differs from the log")));
                }
                if !Self::gate_open(&counts, &rec.slate, self.tau_min) {
                    return Err(Error::invalid(format!("record at step {step} was admitted below the gate")));
                }
                next.next();
            }
            if let Some(item) = rec.selected_item() {
                counts[item.0] += 1;
            }
        }
        if next.peek().is_some() {
            return Err(Error::invalid("admitted records beyond the end of the log"));
        }
        Ok(())
    }
}
