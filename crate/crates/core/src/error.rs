use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violated a documented precondition.
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// LU factorization hit a zero pivot or the condition estimate exceeds
    /// the reciprocal of machine epsilon.
    #[error("matrix is singular to working precision (condition estimate {condition:e})")]
    Singular { condition: f64 },

    /// A filter matrix is invertible but too ill-conditioned to trust.
    #[error("refusing to filter: condition number {condition:e} exceeds limit {limit:e}")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),

    /// Rejection sampling accepted nothing.
    #[error("no prior samples accepted: {0}")]
    NoAcceptance(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for refusals caused by numerics rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. } | Error::IllConditioned { .. } | Error::NoAcceptance(_)
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
