use thiserror::Error;

use crate::talg::Shape;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch { expected: Shape, got: Shape },

    #[error("operation requires matrix-mode elements, got {0:?}")]
    VectorMode(Shape),

    #[error("non-finite entry in element")]
    NonFinite,

    #[error("dimension {0} outside the supported range 1..=64")]
    BadDimension(usize),

    #[error("operator norm did not converge after {iterations} iterations (last estimate {estimate:e})")]
    NormNotConverged { iterations: usize, estimate: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("divergent configuration: {0}")]
    Divergent(String),

    #[error("scale overflow at n = {n}: largest usable n is {max_n}")]
    ScaleOverflow { n: usize, max_n: usize },

    #[error("control function has not been certified for these parameters")]
    NotCertified,

    #[error("refused: {0}")]
    Refused(String),
}
