//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error("unrecognized label {token:?} at row {row}")]
    UnknownLabel { row: usize, token: String },

    #[error("{what} out of range: {value} not in [{low}, {high}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        low: f64,
        high: f64,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("template {name}: {reason}")]
    Template { name: String, reason: String },

    #[error("missing argument: {0}")]
    MissingArgument(&'static str),

    #[error("unexpected argument: {0}")]
    UnexpectedArgument(&'static str),

    #[error("sample set has no reference answer (required by this scorer)")]
    MissingReference,

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("raw scores mix methods: {0} and {1}")]
    MixedMethods(String, String),

    #[error("need at least {needed} predictions for {bins} quantile bins, got {got}")]
    TooFewForBins {
        needed: usize,
        got: usize,
        bins: usize,
    },

    #[error("both classes must be present to compute AUC")]
    SingleClass,

    #[error("misaligned inputs: {0}")]
    Misaligned(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("environment variable {0} is not set")]
    MissingApiKey(String),

    #[error("authentication failed (status {status}): {body}")]
    Auth { status: u16, body: String },

    #[error("provider error (status {status}): {body}")]
    Provider { status: u16, body: String },

    #[error("transport failure after {attempts} attempts: {last}")]
    Transport { attempts: u32, last: String },

    #[error("malformed provider response: {0}")]
    BadResponse(String),

    #[error("simulator has no record matching the prompt")]
    UnknownStatement,

    #[error("sample {index} failed: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
