use thiserror::Error;

/// Errors raised by experiment construction, file parsing and the analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("map is not total: no image for `{0}`")]
    PartialMap(String),

    #[error("parameter lists differ: {0}")]
    ParameterMismatch(String),

    #[error("size guard exceeded: {0}")]
    Guard(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("grid does not cover the required range: {0}")]
    InsufficientGrid(String),

    #[error("scaled support leaves the grid: {0}")]
    GridOverflow(String),

    #[error("nesting violation: {0}")]
    NestingViolation(String),

    #[error("property falsified: {0}")]
    Falsified(String),

    #[error("JSON error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Input validation problems, as opposed to falsified properties or I/O failures.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NestingViolation(_) | Error::Falsified(_) | Error::Io(_) | Error::Csv(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
