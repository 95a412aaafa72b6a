use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("user {user} is assigned to both {first} and {second}")]
    DuplicateSplitAssignment {
        user: String,
        first: &'static str,
        second: &'static str,
    },

    #[error("user {0} is not assigned to any split")]
    UnassignedUser(String),

    #[error("split references unknown user {0}")]
    UnknownSplitUser(String),

    #[error("training corpus is empty")]
    EmptyCorpus,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("hour {0} is outside 0..=23")]
    HourOutOfRange(u8),

    #[error("class {0:?} does not occur in the training split")]
    UnknownClass(String),

    #[error("predicted class id {id} is not in the class table ({classes} classes)")]
    UnknownClassId { id: usize, classes: usize },

    #[error("numerical failure at epoch {epoch}: {detail}")]
    NumericalAbort { epoch: usize, detail: String },

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },
}

impl Error {
    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }
}
