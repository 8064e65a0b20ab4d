use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by model construction, simulation, and experiment I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {constraint}")]
    InvalidParameter { name: String, constraint: String },

    #[error("energy {value} outside the domain {domain}")]
    Domain { value: f64, domain: String },

    #[error("threshold u={threshold} is unreachable: {reason}")]
    UnreachableThreshold { threshold: f64, reason: String },

    #[error("replication {index}: {source}")]
    Replication {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("CDF curves have no overlapping grid range")]
    DisjointGrids,

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            constraint: constraint.into(),
        }
    }
}
