//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors produced by grid construction, solvers and reconstruction pipelines.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("bump support touches the boundary: {0}")]
    SupportTouchesBoundary(String),

    #[error("unknown norm id `{0}`")]
    UnknownNorm(String),

    #[error("frame construction failed: {0}")]
    InvalidFrame(String),

    #[error("orthogonality violated: {0}")]
    OrthogonalityViolated(String),

    #[error("linear solver failed after {iterations} iterations (relative residual {residual:.3e}, required {required:.3e})")]
    SolverBreakdown {
        iterations: usize,
        residual: f64,
        required: f64,
    },

    #[error("Poisson solve did not reach tolerance: residual {residual:.3e} > {required:.3e}")]
    PoissonResidual { residual: f64, required: f64 },

    #[error("fixed point iteration is not contracting: growth factor {factor:.3e}")]
    NonContraction { factor: f64 },

    #[error("remainder residual {residual:.3e} exceeds tolerance {tolerance:.3e} in the warned contraction regime")]
    RemainderResidual { residual: f64, tolerance: f64 },

    #[error("probe metadata mismatch: {0}")]
    ProbeMismatch(String),

    #[error("frequency outside the admissible set: {0}")]
    FrequencyRejected(String),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("serialization error: {0}")]
    Serialization(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CoreError {
    /// Exit code the CLI maps this error to (2 for config errors, 1 otherwise).
    pub fn exit_code(&self) -> i32 {
        match self {
            CoreError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
