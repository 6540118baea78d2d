use thiserror::Error;

/// Errors raised by the geometry, measure and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("unsupported ambient dimension {0}")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("exponent p = {0} must satisfy p >= 1")]
    InvalidP(f64),
    #[error("finite-difference step {0} outside [1e-6, 1e-2]")]
    InvalidEps(f64),
    #[error("origin is not an interior point (min support offset {0:e})")]
    OriginNotInterior(f64),
    #[error("body does not contain the origin (support {0:e} < 0)")]
    OriginNotContained(f64),
    #[error("parameter t = {0} outside [-1, 1]")]
    OutOfRange(f64),
    #[error("unknown catalog entry `{0}`")]
    UnknownName(String),
    #[error("L_p mixed volume {0:e} too small in this direction")]
    DegenerateDirection(f64),
    #[error("concavity violation: {reason}")]
    ConcavityViolation { reason: String, witness: Option<Box<ConcavityWitness>> },
    #[error("degenerate sample after {attempts} attempts")]
    DegenerateSample { attempts: usize },
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A point triple `(x, y, lambda)` at which the declared concavity fails.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityWitness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: f64,
}

pub type Result<T> = std::result::Result<T, Error>;
