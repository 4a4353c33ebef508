use std::path::PathBuf;

/// Errors produced by the recovery toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular system has no retained singular values")]
    EmptySingularSystem,

    #[error("singular value decomposition failed: {0}")]
    SvdFailed(String),

    #[error("operator is identically zero")]
    ZeroOperator,

    #[error("signal is identically zero")]
    ZeroSignal,

    #[error("operator norm {sigma_max} is not below 1; scale the operator first")]
    OperatorNotScaled { sigma_max: f64 },

    #[error("size overflow in {0}")]
    Overflow(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "regularization parameter must be positive and finite, got {alpha}"
        )))
    }
}

pub(crate) fn check_finite(values: &[f64], context: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}
