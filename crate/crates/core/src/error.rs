use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("usage error: {0}")]
    Usage(String),

    /// The field is not in the admissible cone (`∫H(g(v)) <= 0`).
    #[error("field is not admissible: ∫H(g(v)) = {integral:e}")]
    Admissibility { integral: f64 },

    #[error("degenerate field: {0}")]
    Degenerate(String),

    /// No admissible descent step was found; `last` holds the final iterate's node values.
    #[error("descent stagnated after {iterations} iterations (relative gradient {gradient:e})")]
    Stagnation {
        iterations: usize,
        gradient: f64,
        last: Vec<f64>,
    },

    #[error("shooting bracket invalid: {0}")]
    Bracket(String),

    #[error("path tuning failed: {0}")]
    Tuning(String),
}

pub type Result<T> = std::result::Result<T, Error>;
