use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Projection fit would divide by a (near) zero singular value.
    #[error("rank deficient batch: singular value {index} is {value:e} (largest {largest:e})")]
    RankDeficient {
        index: usize,
        value: f64,
        largest: f64,
    },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("ingest error in {file}: {detail}")]
    Ingest { file: PathBuf, detail: String },

    #[error("metric error: {0}")]
    Metric(String),

    #[error("not implemented: {0}")]
    NotImplemented(&'static str),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn ingest(file: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Ingest {
            file: file.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category used by the CLI's one-line failure report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape { .. } => "shape",
            Error::Numeric(_) => "numeric",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::Diverged { .. } => "diverged",
            Error::Contract(_) => "contract",
            Error::Ingest { .. } => "ingest",
            Error::Metric(_) => "metric",
            Error::NotImplemented(_) => "not_implemented",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}
