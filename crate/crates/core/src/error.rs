//! Error types shared across the library.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmwuError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("block shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },

    #[error("invalid simplex point: {0}")]
    InvalidSimplexPoint(String),

    #[error("invalid tangent vector: {0}")]
    InvalidTangentVector(String),

    #[error("step too large: {0}")]
    StepTooLarge(String),

    #[error("schedule quadratic has no root in (0,1): s = {root} for alpha = {alpha}, gamma = {gamma}, mu = {mu}")]
    NoRootInUnitInterval {
        root: f64,
        alpha: f64,
        gamma: f64,
        mu: f64,
    },

    #[error("invalid schedule parameters: {0}")]
    InvalidParams(String),

    #[error("point is not critical: Riemannian gradient norm {grad_norm:.3e} exceeds {tol:.3e}")]
    NotCritical { grad_norm: f64, tol: f64 },

    #[error("point is not a strict saddle: smallest Hessian eigenvalue {lambda_min:.6e} is not negative")]
    NotSaddle { lambda_min: f64 },

    #[error("critical-point refinement did not converge from seed {seed_index}")]
    NonConvergence { seed_index: usize },

    #[error("step failed at iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        source: Box<AmwuError>,
    },
}

impl AmwuError {
    /// Annotate an error with the run-loop iteration at which it occurred.
    pub fn at_iteration(self, iteration: usize) -> AmwuError {
        AmwuError::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, AmwuError>;
