use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },

    #[error("{kind} `{id}` references unknown {parent_kind} `{parent}`")]
    DanglingReference {
        kind: &'static str,
        id: String,
        parent_kind: &'static str,
        parent: String,
    },

    #[error("timestamp {later} precedes account creation {earlier}")]
    ClockInconsistency { earlier: String, later: String },

    #[error("no usable documents")]
    NoDocuments,

    #[error("training data contains a single class")]
    SingleClass,

    #[error("non-finite value at row {row}, column `{column}`")]
    NonFinite { row: usize, column: String },

    #[error("expected {expected} features, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("unknown hyperparameter `{key}` for {algorithm}")]
    UnknownHyperparameter { algorithm: &'static str, key: String },

    #[error("invalid value `{value}` for hyperparameter `{key}`: {reason}")]
    InvalidHyperparameter {
        key: String,
        value: String,
        reason: String,
    },

    #[error("class {class} has {count} members, fewer than k = {k}")]
    ClassTooSmall { class: u8, count: usize, k: usize },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("k = {k} outside 1..={len}")]
    KOutOfRange { k: usize, len: usize },

    #[error("infeasible configuration: {0}")]
    InfeasibleConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown {kind} `{value}`")]
    UnknownName { kind: &'static str, value: String },

    #[error("external tagger failed: {0}")]
    Tagger(String),
}
