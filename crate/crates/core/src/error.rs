use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite state at step {step}{}", trajectory.map(|i| format!(" (trajectory {i})")).unwrap_or_default())]
    NonFinite { step: usize, trajectory: Option<usize> },

    #[error("interval domain violation in `{primitive}` on [{lo}, {hi}]")]
    Domain {
        primitive: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("inclusion function produced inverted bounds at coordinate {coord}")]
    InvertedBounds { coord: usize },

    #[error("dynamics are not expressed in the primitive-op vocabulary")]
    NotExpressible,

    #[error("noise is not empirically sub-Gaussian: {0}")]
    NonSubGaussian(String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("degenerate region: {0}")]
    DegenerateRegion(String),
}

pub type Result<T> = std::result::Result<T, Error>;
