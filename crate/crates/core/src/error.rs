use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column {0} has zero Euclidean norm")]
    ZeroColumn(usize),

    #[error("support {support:?} is rank deficient")]
    RankDeficient { support: Vec<usize> },

    #[error("input contains NaN or infinite values")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("enumeration of {count} candidates exceeds the limit of {limit}")]
    CombinatorialBlowup { count: u128, limit: u128 },

    #[error("{n} samples cannot be split into {folds} folds")]
    TooFewSamples { n: usize, folds: usize },

    #[error("covariance is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-numeric cell {value:?} at row {row}, column {col}")]
    NonNumericCell { row: usize, col: usize, value: String },

    #[error("only {eligible} clusters have at least {per_cluster} members, {wanted} requested")]
    InsufficientClusterSizes {
        eligible: usize,
        wanted: usize,
        per_cluster: usize,
    },

    #[error("true support is empty")]
    EmptyTrueSupport,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn rank_deficient(support: &[usize]) -> Self {
        Error::RankDeficient {
            support: support.to_vec(),
        }
    }
}
