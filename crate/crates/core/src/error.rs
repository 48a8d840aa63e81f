use thiserror::Error;

/// Errors surfaced by the solver workbench.
#[derive(Error, Debug)]
pub enum CoreError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("consistency violation: {0}")]
    Consistency(String),

    #[error("wrong arity: {kind} expects {expected} input wavenumbers, got {got}")]
    Arity {
        kind: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("fixed-point iteration diverged after {iterations} iterations (residual {residual:.3e})")]
    Divergence { iterations: usize, residual: f64 },

    #[error("non-finite value detected at step {step}")]
    NonFinite { step: usize },

    #[error("configuration rejected: {0}")]
    Config(String),

    #[error("snapshot matrix rank {rank} is below the requested latent dimension {requested}")]
    RankDeficient { rank: usize, requested: usize },

    #[error("checkpoint integrity failure: {0}")]
    Integrity(String),

    #[error("unsupported checkpoint version {found_major}.{found_minor} (supported major {supported_major})")]
    Version {
        found_major: u16,
        found_minor: u16,
        supported_major: u16,
    },

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CoreError>;
