use thiserror::Error;

/// Errors produced by the calibration solver and its tooling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("zero gain at sensor {sensor}")]
    ZeroGain { sensor: usize },

    #[error("{what} must be positive, got {value}")]
    NonPositiveVariance { what: &'static str, value: f64 },

    #[error("uninformative sensor {sensor}: all readings are zero")]
    UninformativeSensor { sensor: usize },

    #[error("degenerate measure: all quadrature weights underflow")]
    DegenerateMeasure,

    #[error("divergence at iteration {iteration}: non-finite {field}")]
    Divergence { iteration: usize, field: &'static str },

    #[error("zero gain estimate at sensor {sensor}")]
    ZeroGainEstimate { sensor: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures that come from the filesystem rather than from inputs.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
