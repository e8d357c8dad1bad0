use thiserror::Error;

/// Errors raised by the spectral, variational and dynamics routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("lowest weight l0 = {l0} is not a root of the structure function (psi(l0) = {value:e})")]
    NotALowestWeight { l0: f64, value: f64 },

    #[error("non-unitary block: psi(l0 + {v}) = {value:e} is negative before the tower terminates")]
    NonUnitary { v: usize, value: f64 },

    #[error("eigensolver did not converge for level {index} after {iterations} iterations (off-diagonal residual {residual:e})")]
    NoConvergence {
        index: usize,
        iterations: usize,
        residual: f64,
        /// Eigenvalue estimates at the moment the iteration cap was hit.
        partial: Vec<f64>,
    },

    #[error("rotation angle r = {0} is singular (cos r = 0)")]
    SingularAngle(f64),

    #[error("coupling |g| = 0: the variational phase is undefined")]
    ZeroCoupling,

    #[error("no stationary point in bracket (residual {lo:e} at alpha = {alpha_lo}, {hi:e} at alpha = {alpha_hi})")]
    NoStationaryPoint {
        alpha_lo: f64,
        alpha_hi: f64,
        lo: f64,
        hi: f64,
    },

    #[error("signal has {got} samples, at least {need} are required")]
    TooFewSamples { got: usize, need: usize },

    #[error("signal grid is not uniform")]
    NonUniformGrid,

    #[error("at least {need} distinct energies are required, got {got}")]
    TooFewLevels { got: usize, need: usize },

    #[error("level index {v} is outside a block of dimension {dim}")]
    LevelOutOfRange { v: usize, dim: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
