use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or estimator parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The data handed to an estimator cannot support it (too short, malformed).
    #[error("invalid input: {0}")]
    Input(String),

    /// An estimator ran but could not produce a usable value.
    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

macro_rules! ensure {
    ($cond:expr, $kind:ident, $($arg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        let failed = !($cond);
        if failed {
            return Err($crate::error::Error::$kind(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
