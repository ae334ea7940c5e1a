use chrono::NaiveDate;
use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("calendar alignment error: {0}")]
    Alignment(String),

    #[error("feature spec error: {0}")]
    Spec(String),

    #[error("insufficient data: {0}")]
    Data(String),

    #[error("singular design: columns {columns:?} are linearly dependent on earlier columns")]
    SingularDesign { columns: Vec<String> },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("scoring error: {0}")]
    Score(String),

    #[error("missing date {0} in input")]
    Gap(NaiveDate),

    #[error("duplicate date {0} in input")]
    Duplicate(NaiveDate),

    #[error("invalid value at row {row}: {message}")]
    Value { row: usize, message: String },

    #[error("unsupported schema version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command line front end.
    ///
    /// 2 = data validation, 3 = fit failure, 4 = I/O failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SingularDesign { .. } | Error::Fit(_) => 3,
            Error::Io(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
