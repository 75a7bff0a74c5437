use std::path::PathBuf;

/// Errors produced by the solver, the statistics layer and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("stencil error: {0}")]
    Stencil(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("state is not boundary consistent: {0}")]
    BoundaryConsistency(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("indexing error: {0}")]
    Indexing(String),

    #[error("statistics error: {0}")]
    Statistics(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("replay mismatch: {0}")]
    Replay(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
