use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("component count {n} outside supported range 1..=16")]
    UnsupportedWidth { n: usize },
    #[error("dimension mismatch: expected {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("component {component} out of range 1..={n}")]
    ComponentOutOfRange { component: usize, n: usize },
    #[error("value {value} does not fit in {n} bits")]
    ValueOutOfRange { value: u64, n: usize },
    #[error("table entry {value} does not fit in {n} bits")]
    TableEntryOutOfRange { value: u64, n: usize },
    #[error("requested {requested} iterations but the strategy has {available} terms")]
    StrategyTooShort { requested: usize, available: usize },
    #[error("operation needs a nonempty strategy")]
    EmptyStrategy,
    #[error("invalid bit string `{0}`")]
    InvalidBitString(String),
    #[error("invalid strategy `{text}`: {reason}")]
    InvalidStrategy { text: String, reason: String },
    #[error("unknown builtin map `{0}`")]
    UnknownBuiltin(String),
    #[error("invalid map file: {0}")]
    InvalidMapFile(String),
    #[error("unknown coding scheme `{0}` (expected 1, 2 or 2-split)")]
    UnknownScheme(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid dataset file: {0}")]
    InvalidDatasetFile(String),
    #[error("invalid model file: {0}")]
    InvalidModelFile(String),
    #[error("model not usable as a network oracle: {0}")]
    UnsuitableOracle(String),
    #[error("invalid experiment config: {0}")]
    InvalidExperimentConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
