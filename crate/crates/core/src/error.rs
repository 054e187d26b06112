use thiserror::Error;

#[derive(Debug, Error)]
pub enum EpiError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {left} vs {right} nodes")]
    GridMismatch { left: usize, right: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value in field")]
    NonFinite,
    #[error("degenerate slope field: min(u_xx + a) = {min_v:e}")]
    Degenerate { min_v: f64 },
    #[error("Newton solve did not converge after {iters} iterations (scaled residual {residual:e})")]
    NonConvergence { iters: usize, residual: f64 },
    #[error("missing checkpoints: {0}")]
    MissingCheckpoints(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, EpiError>;
