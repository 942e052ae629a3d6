use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("too many unparseable rows: {failed} of {total} rows failed to parse")]
    TooManyFailures { failed: usize, total: usize },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("invalid factor table: {0}")]
    Factor(String),

    #[error("join error: {0}")]
    Join(String),

    #[error("CPI lookup failed: no index for year {0}")]
    CpiLookup(i32),

    #[error("invalid CPI table: {0}")]
    Cpi(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("label error: {0}")]
    Label(String),

    #[error("rate error: missing or zero building units for counties {0:?}")]
    Rate(Vec<String>),

    #[error("basis error: {0}")]
    Basis(String),

    #[error("family error: {0}")]
    Family(String),

    #[error("rank deficient penalized system in term `{0}`")]
    Rank(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unknown {kind} `{name}`")]
    Lookup { kind: &'static str, name: String },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("data error in column `{column}`: {message}")]
    Data { column: String, message: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

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
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn lookup(kind: &'static str, name: impl Into<String>) -> Self {
        Error::Lookup {
            kind,
            name: name.into(),
        }
    }

    /// True for failures caused by inputs or configuration rather than by a
    /// numerical or internal fault.
    pub fn is_user_error(&self) -> bool {
        !matches!(
            self,
            Error::Rank(_) | Error::DegenerateFit(_) | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
