use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("zero-degree {axis} `{id}` in bipartite matrix")]
    ZeroDegree { axis: &'static str, id: String },

    #[error("requested {requested} singular triplets but the matrix is {rows}x{cols}")]
    Dimension {
        requested: usize,
        rows: usize,
        cols: usize,
    },

    #[error("SVD did not converge after {sweeps} sweeps (residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("similarity matrices are over different item orderings")]
    ItemMismatch,

    #[error("user `{user}` does not participate in community {community}")]
    NotParticipant { user: String, community: usize },

    #[error("graph has no edges")]
    EdgelessGraph,

    #[error("silhouette undefined: {0}")]
    SilhouetteUndefined(String),

    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by unreadable or malformed input files.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Parse { .. })
    }
}
