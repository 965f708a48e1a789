use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension {requested} exceeds the configured cap {cap}")]
    DimensionCap { requested: usize, cap: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("negative eigenvalue {0} below tolerance")]
    NegativeEigenvalue(f64),

    #[error("invalid commitment scheme: {0}")]
    InvalidScheme(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("delayed-measurement record: honest opening is undefined without an outcome index")]
    DelayedMeasurementRecord,

    #[error("index {index} out of range for {len} evidence states")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("scheme is not ideal (fidelity {fidelity}); use the non-ideal attack")]
    NonIdealScheme { fidelity: f64 },

    #[error("states purify different density matrices (max deviation {deviation})")]
    PurificationMismatch { deviation: f64 },

    #[error("bob mode {0} is not supported for this scheme")]
    UnsupportedBobMode(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
