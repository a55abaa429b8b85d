use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
///
/// Variants are grouped into coarse classes (see [`ErrorClass`]) so that
/// front ends can map them onto stable exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: missing required column `{0}`")]
    MissingColumn(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("validation failed ({} problem(s)): {}", .0.len(), .0.join("; "))]
    Validation(Vec<String>),

    #[error("data error: {0}")]
    Data(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("rank deficiency: columns [{}] are linearly dependent", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("degrees of freedom exhausted: n = {n}, parameters = {p}")]
    DegreesOfFreedom { n: usize, p: usize },

    #[error("empty sample: {0}")]
    EmptySample(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse error classes, stable across releases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Schema,
    Validation,
    Config,
    Numerical,
    EmptySample,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::MissingColumn(_) | Error::Schema(_) => ErrorClass::Schema,
            Error::Validation(_) | Error::Data(_) => ErrorClass::Validation,
            Error::Config(_) | Error::Usage(_) | Error::Domain(_) => ErrorClass::Config,
            Error::RankDeficient(_) | Error::Singular(_) | Error::DegreesOfFreedom { .. } => {
                ErrorClass::Numerical
            }
            Error::EmptySample(_) => ErrorClass::EmptySample,
            Error::Io(_) | Error::Json(_) => ErrorClass::Io,
            Error::Csv(e) => match e.kind() {
                csv::ErrorKind::Io(_) => ErrorClass::Io,
                _ => ErrorClass::Schema,
            },
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
