use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("duplicate unit id {0:?}")]
    DuplicateId(String),

    #[error("negative count {value} for unit {id:?}")]
    NegativeCount { id: String, value: f64 },

    #[error("unknown unit id {0:?}")]
    UnknownUnit(String),

    #[error("region {0:?} has no members")]
    EmptyRegion(String),

    #[error("unknown region {0:?}")]
    UnknownRegion(String),

    #[error("empty sampling scope")]
    EmptyScope,

    #[error("unit {0:?} was drawn but has no label")]
    Unlabeled(String),

    #[error("unit {0:?} is already labeled")]
    Relabel(String),

    #[error("unit {0:?} has not been drawn")]
    NotDrawn(String),

    #[error("draw source mismatch: expected {expected}, found {found}")]
    SourceMismatch { expected: String, found: String },

    #[error("invalid proposal: {0}")]
    InvalidProposal(String),

    #[error("control variate has no value for unit {0:?}")]
    MissingControlVariate(String),

    #[error("no draws in scope; interval undefined")]
    UndefinedInterval,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dataset {0:?} not loaded")]
    UnknownDataset(String),

    #[error("session {0:?} not found")]
    UnknownSession(String),

    #[error("corrupt session record: {0}")]
    CorruptRecord(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
