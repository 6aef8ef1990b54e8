use std::fmt;

use thiserror::Error;

/// A problem with a single input row. Row errors are collected so that a
/// whole file can be reported at once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based physical line number in the source file (the header is line 1).
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, line {}", self.message, self.line)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("{} row error(s); first: {}", .0.len(), .0[0])]
    Rows(Vec<RowError>),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("future purchase: {purchase} is after analysis date {analysis}")]
    FuturePurchase {
        purchase: chrono::NaiveDate,
        analysis: chrono::NaiveDate,
    },

    #[error("duplicate customer id `{0}`")]
    DuplicateCustomer(String),

    #[error("invalid rule set: {0}")]
    InvalidRules(String),

    #[error("insufficient data for quintiles: need at least 5 records, got {0}")]
    InsufficientQuintileData(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("k exceeds distinct points (k = {k}, distinct = {distinct})")]
    KExceedsDistinct { k: usize, distinct: usize },

    #[error("expected exactly 4 clusters, got {0}")]
    ClusterCount(usize),

    #[error("empty sample: {0}")]
    EmptySample(&'static str),

    #[error("degenerate responses: {0}")]
    DegenerateResponses(&'static str),

    #[error("degenerate proportions: pooled proportion is {0}")]
    DegenerateProportions(f64),

    #[error("zero pooled variance with unequal means")]
    ZeroVarianceUnequalMeans,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("sample too large for exact enumeration (n1 = {n1}, n2 = {n2})")]
    ExactTooLarge { n1: usize, n2: usize },
}

impl Error {
    /// True for problems with the inputs themselves (malformed files, bad
    /// configuration) as opposed to inputs that parse but cannot be analysed.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::MissingColumn(_)
                | Error::Rows(_)
                | Error::Csv(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::FuturePurchase { .. }
                | Error::DuplicateCustomer(_)
                | Error::InvalidRules(_)
                | Error::InvalidConfig(_)
                | Error::InvalidInput(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
