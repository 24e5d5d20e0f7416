//! Crate-wide error type.

/// Errors reported by the localization library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// UAV and source positions coincide, so no bearing is defined.
    #[error("degenerate geometry: UAV and source positions coincide")]
    DegenerateGeometry,

    /// A model or configuration parameter violates its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A Bayes update produced zero posterior weight in every cell.
    #[error("belief contradiction: posterior weight is zero in every cell")]
    BeliefContradiction,

    /// A log file failed to parse; `line` is 1-based and counts the header.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
