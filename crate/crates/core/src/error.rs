use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Fock dimension {0}: at least 2 levels are required")]
    InvalidDimension(usize),

    #[error("space mismatch: dimension {left} vs {right}")]
    SpaceMismatch { left: usize, right: usize },

    #[error("photon number {n} out of range for dimension {dim}")]
    OutOfRange { n: usize, dim: usize },

    #[error("state has zero norm and cannot be normalized")]
    ZeroVector,

    #[error("invalid parameter: {0}")]
    Domain(String),

    #[error("matrix is not a valid density operator: {0}")]
    InvalidState(String),

    #[error("dispersive limit violated: {0}")]
    DispersiveLimit(String),

    #[error("superoperator of dimension {dim} too large for dense assembly (limit {limit}); use the matrix-free path")]
    Capacity { dim: usize, limit: usize },

    #[error("steady-state solver failed: {0}")]
    Solver(String),

    #[error("integration became stiff at t = {t}: step {step:e} below minimum ({detail})")]
    Stiffness { t: f64, step: f64, detail: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("truncation inadequate: discarded weight {discarded:e} exceeds {limit:e}")]
    Truncation { discarded: f64, limit: f64 },
}
