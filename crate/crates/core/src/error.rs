use thiserror::Error;

/// Errors raised by the discretization, solvers and optimizer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("bounds inverted at node {index}: alpha = {alpha} > beta = {beta}")]
    BoundsInverted { index: usize, alpha: f64, beta: f64 },

    #[error("instability detected at step {step}: slice norm {norm:e} exceeds {threshold:e}")]
    InstabilityDetected { step: usize, norm: f64, threshold: f64 },

    #[error("singular step system at step {step}: {reason}")]
    SingularStep { step: usize, reason: String },

    #[error("banded factorization failed: zero pivot at row {0}")]
    ZeroPivot(usize),

    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("line search stalled at iteration {iter}: step {step:e} without sufficient decrease")]
    LineSearchStalled { iter: usize, step: f64 },

    #[error("critical cone is degenerate after {attempts} sampling attempts")]
    DegenerateCone { attempts: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = WaveError> = std::result::Result<T, E>;
