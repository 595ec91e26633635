use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("patch index {index} out of range (surface has {count} patches)")]
    PatchIndex { index: usize, count: usize },

    #[error("singular evaluation: {0}")]
    Singular(String),

    #[error("Krylov solver did not converge: relative residual {achieved:.3e} after {iterations} iterations")]
    NoConvergence { achieved: f64, iterations: usize },

    #[error("cannot certify tail bound: {reason} (level norms {level_norms:?})")]
    Certification {
        reason: String,
        level_norms: Vec<f64>,
    },

    #[error("residual estimation stagnated: delta {delta:.3e}, residual {residual:.3e}")]
    Stagnation { delta: f64, residual: f64 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
