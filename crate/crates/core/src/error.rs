use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("stable range violated: q = {q} exceeds d = {d}")]
    StableRange { q: usize, d: usize },
    #[error("size cap exceeded: {what} = {value} > {cap}")]
    SizeCap {
        what: &'static str,
        value: usize,
        cap: usize,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("eigensolver failed to converge")]
    Eigen,
    #[error("non-finite state encountered at t = {t}")]
    BlowUp { t: f64 },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("arithmetic error: {0}")]
    Arithmetic(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("insufficient statistical power: {0}")]
    Power(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
