use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("variable name must not be empty")]
    EmptyVariableName,
    #[error("duplicate variable name `{0}`")]
    DuplicateVariableName(String),
    #[error("too many variables: {n} (limit {max})")]
    TooManyVariables { n: usize, max: usize },
    #[error("variable index {index} out of range for {n} variables")]
    VariableOutOfRange { index: usize, n: usize },
    #[error("state enumeration over {n} variables exceeds the cap of {cap}")]
    EnumerationTooLarge { n: usize, cap: usize },
    #[error("herbrand bases differ")]
    BaseMismatch,
    #[error("width mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },
    #[error("body length {len} exceeds variable count {n}")]
    BodyLengthTooLarge { len: usize, n: usize },
    #[error("body index {index} out of range ({available} bodies of length {len})")]
    BodyIndexOutOfRange {
        index: u64,
        len: usize,
        available: u64,
    },
    #[error("brute-force rule search is capped at {cap} variables, got {n}")]
    LearnCapExceeded { n: usize, cap: usize },
    #[error("generation budget exceeded for n = {n} in {mode} mode")]
    GenerationBudget { n: usize, mode: &'static str },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("variable {index} is not a member of the subset")]
    NotInSubset { index: usize },
    #[error("bad magic bytes in {kind} file")]
    BadMagic { kind: &'static str },
    #[error("unsupported {kind} format version {found} (expected {expected})")]
    UnsupportedVersion {
        kind: &'static str,
        found: u8,
        expected: u8,
    },
    #[error("corrupt record in {kind} file: {detail}")]
    CorruptRecord { kind: &'static str, detail: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },
    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    TrainingDiverged { epoch: usize, loss: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
