use thiserror::Error;

/// Errors raised by the cross-validation routines and their oracles.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The regularized scatter could not be factorized, or its reciprocal
    /// condition estimate fell below the guard threshold.
    #[error("singular system (reciprocal condition estimate {rcond:.3e})")]
    Singular { rcond: f64 },

    /// `I - H_Te` is singular for a test fold, so the fold cannot be
    /// removed analytically.
    #[error("singular fold{} (reciprocal condition estimate {rcond:.3e})", fold_suffix(*.fold))]
    SingularFold { fold: Option<usize>, rcond: f64 },

    #[error("class {class} has no samples")]
    DegenerateClass { class: usize },

    #[error("fold {fold}: class {class} is absent from the training set")]
    DegenerateFold { fold: usize, class: usize },

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}

fn fold_suffix(fold: Option<usize>) -> String {
    match fold {
        Some(f) => format!(" {f}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
