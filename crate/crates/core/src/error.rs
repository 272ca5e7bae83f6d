use thiserror::Error;

use crate::transport::FitReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("total order must be odd, got {0}")]
    EvenOrder(usize),

    #[error("component index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("map is not monotone in dimension {dim} at the evaluation point")]
    NonMonotone { dim: usize },

    #[error("non-positive coordinate {dim} under logarithmic preconditioning")]
    OutsideLogDomain { dim: usize },

    #[error("map inversion failed in dimension {dim}: {reason}")]
    InversionFailure { dim: usize, reason: &'static str },

    #[error("underdetermined fit in dimension {dim}: {available} positive-weight samples for {required} coefficients")]
    Underdetermined {
        dim: usize,
        available: usize,
        required: usize,
    },

    #[error("newton iteration did not converge in dimension {dim}")]
    NotConverged { dim: usize, report: Box<FitReport> },

    #[error("degenerate ensemble: all importance weights are zero")]
    DegenerateEnsemble,

    #[error("inconsistent path: state went negative at event {event}")]
    InconsistentPath { event: usize },

    #[error("propensity overflow at t = {time}")]
    PropensityOverflow { time: f64 },

    #[error("missing effective-propensity plug-in: {0}")]
    MissingPlugin(&'static str),

    #[error("empty sample")]
    EmptySample,

    #[error("covariance matrix is not positive definite")]
    SingularCovariance,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
