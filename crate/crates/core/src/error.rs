use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("no feasible point at grid resolution ({points} points per axis)")]
    InfeasibleAtResolution { points: usize },

    #[error("solver failure: {message} (iterations {iterations}, primal residual {primal_residual:e})")]
    Solver {
        message: String,
        iterations: usize,
        primal_residual: f64,
    },

    #[error("PSD rounding failed: eigenvalue {eigenvalue:e} below -{clip:e}")]
    Rounding { eigenvalue: f64, clip: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn argument<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
