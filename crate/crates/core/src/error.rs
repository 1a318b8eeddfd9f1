use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: timestamp {t} does not increase (previous row has {previous})")]
    Ordering {
        path: PathBuf,
        line: usize,
        t: f64,
        previous: f64,
    },

    #[error("{path}: missing signal column(s): {}", missing.join(", "))]
    Schema { path: PathBuf, missing: Vec<String> },

    #[error("insufficient data for {what}: need at least {needed}, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("invalid fleet spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input for {0}")]
    EmptyInput(&'static str),

    #[error("no data: {0}")]
    NoData(String),

    #[error("degenerate value range: every value equals {value}")]
    DegenerateRange { value: f64 },

    #[error("cannot build a histogram from an empty vector")]
    EmptyHistogram,

    #[error("value {value} lies outside the bin range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("cannot form {k} clusters from {n} points")]
    Infeasible { k: usize, n: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("clusterings are not aligned: {left} vs {right} labels")]
    Alignment { left: usize, right: usize },

    #[error("subsample of fraction {fraction} from {len} elements is empty")]
    EmptySample { len: usize, fraction: f64 },

    #[error("user {user_id}: {source}")]
    User {
        user_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("subsampling at {percentage}%: {source}")]
    Percentage {
        percentage: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("missing intermediate results: {}", .0.join(", "))]
    MissingResults(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn for_user(self, user_id: &str) -> Self {
        Error::User {
            user_id: user_id.to_owned(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping user and percentage context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::User { source, .. } | Error::Percentage { source, .. } => source.root(),
            other => other,
        }
    }
}
