use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid signal parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("measurement {0} is exactly zero")]
    ZeroMeasurement(usize),
    #[error("could not generate a tie-free instance after {0} attempts")]
    RegenerationExhausted(usize),
    #[error("malformed instance dump: {0}")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error("shrinkage zeroed every component")]
    AllZeroShrinkage,
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("saddle-point iteration did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("zero vector")]
    ZeroVector,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no records to aggregate")]
    Empty,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}
