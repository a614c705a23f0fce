use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("assumption (H) violated: {0}")]
    AssumptionH(String),

    #[error("eigensolver did not converge")]
    EigenNonConvergence,

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("ill-conditioned Gram matrix (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("cholesky factorization failed for {0}")]
    Cholesky(&'static str),

    #[error("matrix exponential overflow (norm·delta = {0:.3e})")]
    ExpmOverflow(f64),

    #[error("dantzig LP infeasible for row {row}")]
    InfeasibleRow { row: usize },

    #[error("parse error in {source_name}: {message}")]
    Parse { source_name: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for failures caused by the inputs' mathematical content rather than
    /// by I/O or malformed files.
    pub fn is_domain(&self) -> bool {
        !matches!(
            self,
            Error::Io { .. } | Error::Json(_) | Error::Csv(_) | Error::Parse { .. }
        )
    }
}
