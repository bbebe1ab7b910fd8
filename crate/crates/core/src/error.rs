use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("parameter {name} = {value} outside admissible range {range}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        range: String,
    },

    #[error("iterate left the simplex at step {step}: coordinate {coordinate} = {value}, sum = {sum}")]
    DomainEscape {
        step: usize,
        coordinate: usize,
        value: f64,
        sum: f64,
    },

    #[error("point is not a fixed point: residual {residual} >= {tol}")]
    NotAFixedPoint { residual: f64, tol: f64 },

    #[error("trajectory too short: need at least {needed} points, have {available}")]
    TrajectoryTooShort { needed: usize, available: usize },

    #[error("malformed matrix file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
