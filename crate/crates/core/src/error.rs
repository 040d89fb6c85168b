use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rule number {0} is outside 0..=255")]
    RuleOutOfRange(i64),

    #[error("width {width} is outside {min}..={max}")]
    InvalidWidth { width: usize, min: usize, max: usize },

    #[error("state widths differ: {0} vs {1}")]
    WidthMismatch(usize, usize),

    #[error("state value {value:#x} does not fit in {width} cells")]
    StateOverflow { value: u64, width: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("class table: {0}")]
    ClassTable(String),

    #[error("no records left after removing censored executions")]
    EmptyReport,

    #[error("malformed data: {0}")]
    Format(String),

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
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by bad input data rather than bad arguments.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Format(_)
                | Error::Io { .. }
                | Error::Csv(_)
                | Error::Json(_)
                | Error::ClassTable(_)
                | Error::EmptyReport
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
