//! Simulation and learning for ranking under popularity-biased user choice.
//!
//! Users pick at most one item from a slate with softmax probabilities over
//! dispositions `quality + popularity + rank bias`, where popularity grows
//! with an item's selection count until it saturates. The crate provides the
//! environment, reference and learning rankers, the saturated-feedback
//! estimator, analysis tools and an experiment harness.

pub mod analysis;
pub mod choice;
pub mod environment;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod rankers;
pub mod slate;

pub use error::{Error, Result};
