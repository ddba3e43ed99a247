use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("eigenvalue {0} lies outside [-1/2, 1/2]")]
    OutOfRange(f64),

    #[error("reference eigenvalue {0} is within tolerance of +-1/2")]
    IllConditioned(f64),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("value {value} outside interpolation range [0, {end}]")]
    OutOfGrid { value: f64, end: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
