//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("column {column}: need at least {needed} observed values, got {got}")]
    TooFewObserved {
        column: String,
        needed: usize,
        got: usize,
    },

    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,

    #[error("row {row}, column {column}: {message}")]
    CsvParse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("csv: {0}")]
    CsvFormat(String),

    #[error("nothing to test: {0}")]
    NothingToTest(String),

    #[error("test requires at least one fully observed column")]
    NoCompleteColumns,

    #[error("row {row} has no observed cells")]
    FullyMissingRow { row: usize },

    #[error("estimated covariance matrix is identically zero; sample is degenerate")]
    DegenerateSample,

    #[error("test inapplicable: degrees of freedom would be {df}")]
    NoDegreesOfFreedom { df: i64 },

    #[error("singular observed-block covariance for missingness pattern {pattern}")]
    SingularPattern { pattern: String },

    #[error("column {column}: deleting {requested} of {rows} rows would leave it empty")]
    WouldEmptyColumn {
        column: usize,
        requested: usize,
        rows: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the data are well-formed but cannot support the requested
    /// test, as opposed to being malformed input.
    pub fn is_test_inapplicable(&self) -> bool {
        matches!(
            self,
            Error::NothingToTest(_)
                | Error::NoCompleteColumns
                | Error::FullyMissingRow { .. }
                | Error::DegenerateSample
                | Error::NoDegreesOfFreedom { .. }
                | Error::SingularPattern { .. }
                | Error::TooFewRows { .. }
                | Error::TooFewObserved { .. }
        )
    }
}
