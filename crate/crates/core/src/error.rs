use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A requested scale is finer than the base scale of the set it is
    /// applied to, or otherwise inconsistent (non-dyadic ratio, empty chain).
    #[error("invalid scale: {0}")]
    InvalidScale(String),

    /// A square or parameter lies outside the declared bounding domain.
    #[error("outside domain: {0}")]
    OutsideDomain(String),

    /// Precondition violation that is not a scale or domain issue.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An operation that needs a nonempty set received an empty one.
    #[error("empty set: {0}")]
    EmptySet(String),

    /// Random generator could not meet its certificate cap within the
    /// retry budget.
    #[error("generator exhausted retry budget: {0}")]
    GeneratorExhausted(String),

    /// Malformed text or JSON input.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A configuration bundle failed structural validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
