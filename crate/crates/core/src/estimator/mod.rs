//! Learning the quality and popularity parameters from saturated feedback,
//! and the optimistic ranker built on them.

mod bonus;
mod design;
mod filtered;
mod fit;
mod likelihood;
mod params;
mod ranker;

pub use bonus::{exploration_bonus, gamma, tau_min, BonusParams};
pub use design::DesignMatrix;
pub use filtered::{AdmittedRecord, FilteredHistory, RecordGroup};
pub use fit::{fit_mle, project_mle, project_mle_from, FitOptions, ProjectOptions};
pub use likelihood::{g_map, log_likelihood, log_likelihood_gradient, negative_hessian};
pub use params::{ParamLayout, ParamVector};
pub use ranker::{GateRule, QpConfig, QpRanker, QpVariant, TraceRow};
