use std::path::PathBuf;

/// Errors raised across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("point ({0}, {1}) lies outside the density support")]
    Region(f64, f64),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("range error: {message} (achieved n = {achieved})")]
    Range { message: String, achieved: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unknown boundary tag: {0}")]
    Tag(String),
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("expression error: {0}")]
    Expr(String),
    #[error("linear solver: {0}")]
    Linear(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
