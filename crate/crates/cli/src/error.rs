use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Argument(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Core(#[from] fastcv::Error),
    #[error("{failed} of {total} properties failed")]
    VerifyFailed { failed: usize, total: usize },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 ok, 1 verification failure, 2 argument error, 3 I/O error,
    /// 4 numerical degeneracy.
    pub fn exit_code(&self) -> i32 {
        use fastcv::Error as E;
        match self {
            CliError::VerifyFailed { .. } => 1,
            CliError::Argument(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Core(e) => match e {
                E::InvalidArgument(_) | E::Parse { .. } => 2,
                E::Io(_) => 3,
                E::Singular { .. }
                | E::SingularFold { .. }
                | E::DegenerateClass { .. }
                | E::DegenerateFold { .. }
                | E::NumericalDegeneracy(_)
                | E::UndefinedMetric(_)
                | E::Linalg(_) => 4,
            },
        }
    }
}
