use thiserror::Error;

#[derive(Debug, Error)]
pub enum WgError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("case {case}: {source}")]
    Case {
        case: String,
        #[source]
        source: Box<WgError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, WgError>;

pub(crate) fn invalid(msg: impl Into<String>) -> WgError {
    WgError::InvalidParameter(msg.into())
}
