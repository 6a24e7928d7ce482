use thiserror::Error;

/// Errors produced by the simulation, estimation and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index ({i}, {j}) out of range for a {n_y}x{n_z} grid")]
    IndexOutOfRange { i: usize, j: usize, n_y: usize, n_z: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("SNR is undefined for a zero-energy beamspace signal")]
    DegenerateSnr,

    #[error("support mask has no active entries")]
    EmptyMask,

    #[error("zero vector: {0}")]
    ZeroVector(&'static str),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
