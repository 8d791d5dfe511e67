use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed label matrix: row {row} has a label in column {column} after a missing label")]
    MalformedLabelMatrix { row: usize, column: usize },

    #[error("label {label:?} contains the reserved separator {separator:?}")]
    ReservedSeparator { label: String, separator: String },

    #[error("invalid node path: {0}")]
    InvalidNodePath(String),

    #[error("unknown node {0:?}")]
    UnknownNode(String),

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("non-finite feature value at row {row}, column {column}")]
    NonFiniteFeature { row: usize, column: usize },

    #[error("feature dimension mismatch: expected {expected} features, found {found}")]
    FeatureDimensionMismatch { expected: usize, found: usize },

    #[error("row count mismatch: {left} rows vs {right} rows")]
    Alignment { left: usize, right: usize },

    #[error("invalid learner spec: {0}")]
    InvalidLearnerSpec(String),

    #[error("evaluation set is empty")]
    EmptyEvaluationSet,

    #[error("malformed label row: {0}")]
    MalformedRow(String),

    #[error("strategy mismatch: {0}")]
    StrategyMismatch(String),

    #[error("parse error at row {row}, column {column:?}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("invalid dataset schema: {0}")]
    InvalidSchema(String),

    #[error("unsupported model format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("worker pool: {0}")]
    WorkerPool(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
