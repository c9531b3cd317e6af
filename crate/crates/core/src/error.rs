use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("kernel evaluated at the singularity x = 0")]
    Singularity,
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("cube is not aligned with the grid: {0}")]
    Alignment(String),
    #[error("truncation radius {delta} is below the grid resolution {h}")]
    Resolution { delta: f64, h: f64 },
    #[error("power iteration did not converge after {iterations} iterations")]
    Convergence { iterations: usize },
    #[error("support is not contained in the computational domain: {0}")]
    Domain(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
