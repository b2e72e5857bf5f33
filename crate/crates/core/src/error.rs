use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("wrong IDX magic: expected {expected:#010x}, found {found:#010x}")]
    WrongMagic { expected: u32, found: u32 },

    #[error("truncated payload: need {needed} bytes, only {available} available")]
    TruncatedPayload { needed: usize, available: usize },

    #[error("IDX header declares a zero dimension")]
    ZeroDimension,

    #[error("label {value} at index {index} is outside 0..=9")]
    LabelOutOfRange { index: usize, value: u8 },

    #[error("insufficient data: requested {requested}, source holds {available}")]
    InsufficientData { requested: usize, available: usize },

    #[error("split spec is inconsistent: train {train} + validation {validation} != total {total}")]
    BadSplitSpec {
        train: usize,
        validation: usize,
        total: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("component count K must be at least 1")]
    InvalidComponentCount,

    #[error("bad component id {id} for a model with {k} components")]
    BadComponentId { id: usize, k: usize },

    #[error("sub-label {component_id} has {members} majority-label members, need at least 2")]
    TooFewMembers { component_id: usize, members: usize },

    #[error("case {case} is missing required input: {what}")]
    MissingComponent { case: char, what: &'static str },

    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: String },

    #[error("fit failed for K={k}, seed={seed}: {source}")]
    SweepFit {
        k: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("model file is malformed: {0}")]
    BadModelFile(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
