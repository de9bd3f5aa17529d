//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A text input (CSV row, config line, serialized model) failed to parse.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An estimator could not be fit on the given data.
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// A training run failed (divergence, invalid objective).
    #[error("training failed: {0}")]
    Training(String),

    /// An iterative fit exhausted its iteration budget. Carries the tail of
    /// the objective trace for diagnosis.
    #[error("no convergence after {iterations} iterations (last objectives: {:?})", trace_tail(.objective_trace))]
    NonConvergence {
        iterations: usize,
        objective_trace: Vec<f64>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn trace_tail(trace: &[f64]) -> Vec<f64> {
    let k = trace.len().saturating_sub(5);
    trace[k..].to_vec()
}

impl Error {
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn estimation(msg: impl Into<String>) -> Self {
        Error::Estimation(msg.into())
    }
}
