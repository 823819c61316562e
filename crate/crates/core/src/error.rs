//! Crate-wide error type.

use thiserror::Error;

/// Errors raised across the laboratory's modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input bit string did not have the configured length.
    #[error("input length mismatch: expected {expected} bits, got {got}")]
    InputLength { expected: usize, got: usize },

    /// A real-valued vector did not have the expected dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dim { expected: usize, got: usize },

    /// A GF(2) sample set does not span the input space.
    #[error("rank-deficient sample set: rank {rank} of {needed} required")]
    RankDeficient { rank: usize, needed: usize },

    /// A GF(2) sample set admits no exact linear solution.
    #[error("inconsistent sample set: no linear map reproduces all samples")]
    InconsistentSamples,

    /// Invalid configuration value; the message names the offending field.
    #[error("config error: {0}")]
    Config(String),

    /// A layer index outside the organism's layer range.
    #[error("layer {layer} out of range (layer count {count})")]
    Layer { layer: usize, count: usize },

    /// A replay manifest does not match the organism it is replayed on.
    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),

    /// Calibration means too close to define a probe direction.
    #[error("degenerate calibration: mean separation {norm} below threshold")]
    DegenerateCalibration { norm: f64 },

    /// A training set with only one class label present.
    #[error("single-class training set: cannot fit a binary classifier")]
    SingleClass,

    /// Train and test query sets were not disjoint.
    #[error("freshness violation: {0}")]
    Freshness(String),
}

pub type Result<T> = std::result::Result<T, Error>;
