//! Softmax user choice with an outside (no-click) option.
//!
//! A user facing a slate of `M` items has a disposition `δ_i` towards the item
//! at each position. The item at position `i` is selected with probability
//! `exp(δ_i) / (1 + Σ_j exp(δ_j))`; the remaining mass is the probability of
//! selecting nothing. Choice indices are 1-based for positions and `0` for
//! no click.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dispositions outside this range violate the bounded-disposition model
/// (three factors, each in `[-1, 1]`).
pub const DISPOSITION_BOUND: f64 = 3.0;

/// Per-position log-odds of selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispositionVector(Vec<f64>);

impl DispositionVector {
    pub fn new(values: Vec<f64>) -> Self {
        DispositionVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for DispositionVector {
    fn from(values: Vec<f64>) -> Self {
        DispositionVector(values)
    }
}

/// Selection probabilities for each slate position plus the no-click mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceDistribution {
    item_probs: Vec<f64>,
    no_click_prob: f64,
}

impl ChoiceDistribution {
    /// Builds a distribution from explicit probabilities.
    ///
    /// The entries must be in `[0, 1]` and sum to one within `1e-9`.
    pub fn from_probs(item_probs: Vec<f64>, no_click_prob: f64) -> Result<Self> {
        let all = item_probs.iter().chain(std::iter::once(&no_click_prob));
        if all.clone().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(Error::invalid("choice probabilities must lie in [0, 1]"));
        }
        let total: f64 = all.sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "choice probabilities sum to {total}, expected 1"
            )));
        }
        Ok(ChoiceDistribution {
            item_probs,
            no_click_prob,
        })
    }

    /// Probability of selecting the item at each position (position 1 first).
    pub fn item_probs(&self) -> &[f64] {
        &self.item_probs
    }

    pub fn no_click_prob(&self) -> f64 {
        self.no_click_prob
    }

    /// Probability of a choice index (`0` = no click).
    pub fn prob(&self, choice: usize) -> f64 {
        if choice == 0 {
            self.no_click_prob
        } else {
            self.item_probs[choice - 1]
        }
    }
}

/// Quality, popularity and rank bias for each slate position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasTriple {
    pub quality: Vec<f64>,
    pub popularity: Vec<f64>,
    pub rank: Vec<f64>,
}

/// Writes `z_1..z_M` into `out` and returns `z_0`.
///
/// Uses max-subtraction including the implicit zero logit of the outside
/// option, so large dispositions do not overflow.
pub fn softmax_into(dispositions: &[f64], out: &mut [f64]) -> f64 {
    debug_assert_eq!(dispositions.len(), out.len());
    let shift = dispositions.iter().fold(0.0_f64, |m, &d| m.max(d));
    let outside = (-shift).exp();
    let mut denom = outside;
    for (o, &d) in out.iter_mut().zip(dispositions) {
        *o = (d - shift).exp();
        denom += *o;
    }
    for o in out.iter_mut() {
        *o /= denom;
    }
    outside / denom
}

/// Softmax choice probabilities with the no-click option.
pub fn softmax_choice(dispositions: &DispositionVector) -> Result<ChoiceDistribution> {
    let values = dispositions.values();
    if values.is_empty() {
        return Err(Error::invalid("disposition vector must be non-empty"));
    }
    if values.iter().any(|d| !d.is_finite()) {
        return Err(Error::invalid("dispositions must be finite"));
    }
    if values.iter().any(|d| d.abs() > DISPOSITION_BOUND) {
        log::warn!(
            "disposition outside [-{b}, {b}]: {values:?}",
            b = DISPOSITION_BOUND
        );
    }
    let mut item_probs = vec![0.0; values.len()];
    let no_click_prob = softmax_into(values, &mut item_probs);
    Ok(ChoiceDistribution {
        item_probs,
        no_click_prob,
    })
}

/// Elementwise `quality + popularity + rank`.
pub fn disposition(bias: &BiasTriple) -> Result<DispositionVector> {
    let m = bias.quality.len();
    if bias.popularity.len() != m || bias.rank.len() != m {
        return Err(Error::invalid(format!(
            "bias vectors have lengths {}, {}, {}",
            m,
            bias.popularity.len(),
            bias.rank.len()
        )));
    }
    Ok(DispositionVector(
        bias.quality
            .iter()
            .zip(&bias.popularity)
            .zip(&bias.rank)
            .map(|((q, p), r)| q + p + r)
            .collect(),
    ))
}

/// Draws a choice index using exactly one uniform variate.
pub fn sample_choice<R: Rng + ?Sized>(dist: &ChoiceDistribution, rng: &mut R) -> usize {
    sample_index(&dist.item_probs, rng)
}

pub(crate) fn sample_index<R: Rng + ?Sized>(item_probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (i, p) in item_probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i + 1;
        }
    }
    0
}
