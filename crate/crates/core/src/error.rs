use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The ball around the target point holds no other point.
    #[error("point {0} has no neighbors within the descriptor radius")]
    EmptyNeighborhood(usize),

    /// Row 0 of the descriptor has no occupied vertex to start a walk from.
    #[error("descriptor of point {0} has an empty innermost ring")]
    DegenerateStart(usize),

    #[error("alignment source is degenerate (collinear or too few points)")]
    DegenerateAlignment,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: unsupported format: {message}")]
    UnsupportedFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
