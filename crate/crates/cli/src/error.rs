use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {reason}", path.display())]
    MissingInput { path: PathBuf, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("inconsistent workdir: {0}")]
    Inconsistent(String),

    #[error("feature row mismatch: {first} has {first_rows} rows, {second} has {second_rows}")]
    RowMismatch {
        first: String,
        first_rows: usize,
        second: String,
        second_rows: usize,
    },

    #[error(transparent)]
    Core(#[from] menet::Error),
}

impl CliError {
    pub fn missing(path: &Path, reason: impl ToString) -> Self {
        CliError::MissingInput {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        }
    }

    /// 2 missing or invalid input, 3 inconsistent manifest, 4 feature
    /// mismatch, 5 numerical abort.
    pub fn exit_code(&self) -> i32 {
        use menet::Error as E;
        match self {
            CliError::MissingInput { .. } | CliError::Config(_) => 2,
            CliError::Inconsistent(_) => 3,
            CliError::RowMismatch { .. } => 4,
            CliError::Core(e) => match e {
                E::Read { .. } | E::Io(_) | E::EmptyCorpus | E::InvalidConfig(_) | E::HourOutOfRange(_) | E::Format { .. } => 2,
                E::DuplicateSplitAssignment { .. }
                | E::UnassignedUser(_)
                | E::UnknownSplitUser(_)
                | E::UnknownClass(_)
                | E::UnknownClassId { .. } => 3,
                E::DimensionMismatch { .. } => 4,
                E::NumericalAbort { .. } => 5,
            },
        }
    }
}
