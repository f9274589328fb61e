use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input fell outside the domain of a mathematical operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set, grid, or scenario failed validation.
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    /// A sweep produced a non-finite value.
    #[error("{sweep} sweep blew up at node {node} (t = {t})")]
    Blowup {
        sweep: &'static str,
        node: usize,
        t: f64,
    },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },

    #[error("line {line}: bad value for `{key}`: {reason}")]
    Parse {
        key: String,
        line: usize,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input (parameters, scenario files)
    /// rather than numerical failure or I/O.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid { .. }
                | Error::UnknownKey { .. }
                | Error::Parse { .. }
                | Error::Domain(_)
        )
    }
}
