use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("hash range {0} exceeds the largest admissible value {1}")]
    RangeTooLarge(u64, u64),
    #[error("hash range must be at least 1")]
    EmptyRange,
    #[error("domain must be at least 1")]
    EmptyDomain,
    #[error("coefficient a={0} outside [1, P-1]")]
    BadCoefficientA(u64),
    #[error("coefficient b={0} outside [0, P-1]")]
    BadCoefficientB(u64),
    #[error("bucket width must be positive, got {0}")]
    InvalidWidth(f64),
    #[error("tensor order must be at least 1")]
    ZeroOrder,
    #[error("code length must be at least 1")]
    ZeroCodeLength,
    #[error("table count must be at least 1")]
    ZeroTables,
    #[error("input length {got} does not match expected dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("input length {got} exceeds padded dimension {padded}")]
    InputTooLong { padded: usize, got: usize },
    #[error("mode dimensions mismatch: {0}")]
    BadPlan(String),
    #[error("projection value {0} does not fit a 64-bit hash coordinate")]
    CodeOverflow(f64),
    #[error("distance must be positive, got {0}")]
    InvalidDistance(f64),
    #[error("angle must lie in [0, pi], got {0}")]
    InvalidAngle(f64),
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("near threshold {0} must be strictly below far threshold {1}")]
    BadThresholds(f64, f64),
    #[error("scheme {kind} requires the {required} metric")]
    MetricMismatch {
        kind: &'static str,
        required: &'static str,
    },
    #[error("unknown scheme '{0}'")]
    UnknownScheme(String),
    #[error("dataset must contain at least one point")]
    EmptyDataset,
    #[error("query split of {q} must leave both sides of {n} points nonempty")]
    BadSplit { q: usize, n: usize },
    #[error("ground-truth set must be nonempty")]
    EmptyTruth,
    #[error("non-finite value at line {line}")]
    NonFinite { line: usize },
    #[error("line {line}: expected {expected} values, found {got}")]
    RaggedRow {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("record {record}: {msg}")]
    BadRecord { record: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
