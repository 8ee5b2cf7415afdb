//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("a distribution needs at least one support point")]
    EmptySupport,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("negative weight {weight} at index {index}")]
    NegativeWeight { index: usize, weight: f64 },

    #[error("weights must have positive total mass")]
    ZeroMass,

    #[error("{points} points but {weights} weights")]
    WeightCountMismatch { points: usize, weights: usize },

    #[error("moment order p must be >= 1, got {0}")]
    InvalidOrder(f64),

    #[error("instance of {n}x{m} entries exceeds the exact-transport guard of {guard}")]
    TransportGuard { n: usize, m: usize, guard: usize },

    #[error("brute-force matching requires uniform weights")]
    NonUniformWeights,

    #[error("brute-force matching requires equal sizes <= {max}, got {n} vs {m}")]
    BruteForceSize { n: usize, m: usize, max: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("pad target {target} must exceed current output dimension {current}")]
    InvalidPad { current: usize, target: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("no metrics files found under {0}")]
    NoMetrics(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
