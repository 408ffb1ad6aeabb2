use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular point: {0}")]
    Singular(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("variable mismatch: {0}")]
    VariableMismatch(String),
    #[error("spectral mismatch: {0}")]
    SpectralMismatch(String),
    #[error("blowup detected after s = {s}")]
    Blowup { s: f64 },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
