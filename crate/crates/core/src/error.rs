use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Exhaustive slate enumeration would exceed the configured budget.
    #[error(
        "slate enumeration needs {slates} ordered slates, budget is {budget}; \
         use the position-greedy fallback for corpora this large"
    )]
    BudgetExceeded { slates: u128, budget: u64 },

    /// An iterative estimator step stopped before meeting its tolerance.
    #[error("{stage} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        stage: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
