use thiserror::Error;

pub type Result<T> = std::result::Result<T, GpError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty training data")]
    EmptyData,

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparameters(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Cholesky failed at every attempted jitter level.
    #[error("matrix not positive definite after jitter levels {jitters:?}")]
    Conditioning { jitters: Vec<f64> },

    #[error("expectation propagation did not converge after {sweeps} sweeps (last max delta {max_delta:e})")]
    Convergence { sweeps: usize, max_delta: f64 },

    #[error("model state is not converged")]
    NotConverged,

    #[error("degenerate bounding box along dimension {dim}")]
    DegenerateBox { dim: usize },

    #[error("objective is not finite at any restart initialization")]
    Initialization,
}
