use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported spatial dimension {0} (expected 1, 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("grid too coarse: {cells} cells (need at least {min})")]
    GridTooCoarse { cells: usize, min: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("coefficient rejected at s = {witness}: {reason}")]
    CoefficientRejected { witness: f64, reason: String },

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("fixed-point iteration did not converge")]
    FixedPointFailure(Box<crate::stationary::FixedPointFailure>),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
