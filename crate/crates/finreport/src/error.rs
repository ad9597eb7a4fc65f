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

    #[error("{path}:{line}: {message}")]
    CsvRow {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("window slicing: {0}")]
    Windowing(String),

    #[error("indicator input: {0}")]
    Indicator(String),

    #[error("prompt construction: {0}")]
    Prompt(String),

    #[error("backend '{backend}' request failed: {message}")]
    Backend { backend: String, message: String },

    #[error("fixture not found for digest {digest}")]
    FixtureNotFound { digest: String },

    #[error("completion was empty or refused (backend {backend})")]
    EmptyCompletion { backend: String },

    #[error("no score found in evaluator output: {snippet}")]
    ScoreNotFound { snippet: String },

    #[error("evaluator score {value} outside 1-5")]
    ScoreOutOfRange { value: i64 },

    #[error("evaluation produced no usable samples for {criterion}: {detail}")]
    NoSamples { criterion: String, detail: String },

    #[error("classification output is not the expected JSON object: {0}")]
    ClassificationJson(String),

    #[error("metric input: {0}")]
    Metric(String),

    #[error("lexicon file {path}: {message}")]
    Lexicon { path: PathBuf, message: String },

    #[error("pipeline stage '{stage}': {message}")]
    Stage { stage: String, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
