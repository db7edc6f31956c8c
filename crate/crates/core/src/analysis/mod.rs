//! Executable forms of the analytical constructions: the variability
//! constant, the nonidentifiable pair, the two-item walk and lock-in.

mod lockin;
mod nonident;
mod rho;
mod walk;

pub use lockin::{lock_in_experiment, LockInConfig, LockInRun, LockInSummary};
pub use nonident::{
    build_nonidentifiable_pair, nonidentifiability_demo, NonidentReport, NonidentifiablePair, PAIR_RANK_BIAS,
    PAIR_RESCALE,
};
pub use rho::{
    estimate_rho_min, estimate_rho_min_for_instance, nth_ordered_slate, CorrelationBlock, RhoEstimate, EIGEN_TOL,
};
pub use walk::{rank_size_empirical, TwoItemWalkConfig, WalkRun, WalkSummary};
