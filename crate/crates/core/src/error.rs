//! Error types shared across the crate.

use thiserror::Error;

pub use crate::parser::ParseError;
pub use crate::program::ValidationError;

/// Failures of the exact-runtime pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("program is not positively almost surely terminating ({0})")]
    NotPast(String),
    #[error("precision insufficient: {0}; retry with more digits")]
    Precision(String),
    #[error("singular boundary system (pivot {pivot:e} below tolerance)")]
    SingularSystem { pivot: f64 },
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// An oracle would exceed its resource budget.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("resource limit exceeded: {0}")]
pub struct ResourceError(pub String);

/// Umbrella error for callers that do not care which stage failed.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Resource(#[from] ResourceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
