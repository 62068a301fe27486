use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid settings distribution: {0}")]
    InvalidDistribution(String),
    #[error("positive coefficient at setting pair ({x}, {y}) which has zero probability")]
    ZeroProbabilitySetting { x: usize, y: usize },
    #[error("scenario too large for strategy enumeration ({0} combined strategies)")]
    ScenarioTooLarge(u128),
    #[error("round index out of range: {0}")]
    RoundOutOfRange(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("empty selection: no rounds selected")]
    EmptySelection,
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),
    #[error("invalid source model: {0}")]
    InvalidSource(String),
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("program not settings-blind")]
    NotSettingsBlind,
    #[error("too few samples for the independence audit: {got} < {min}")]
    TooFewSamples { got: usize, min: usize },
    #[error("value {value} outside domain {domain}")]
    Domain { value: f64, domain: &'static str },
    #[error("infeasible acceptance threshold {0} (must be < 1)")]
    InfeasibleThreshold(f64),
    #[error("invalid certification config: {0}")]
    InvalidConfig(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
