use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mode {mode} for a tensor of order {order}")]
    InvalidMode { mode: usize, order: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("mode lists {rows:?} / {cols:?} are not a partition of 0..{order}")]
    NotAPermutation {
        rows: Vec<usize>,
        cols: Vec<usize>,
        order: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("SVD of a {rows}x{cols} matrix did not converge")]
    SvdNoConvergence { rows: usize, cols: usize },

    #[error("mode-{mode} update failed: {source}")]
    ModeUpdate {
        mode: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("normal matrix of size {0} is not positive definite")]
    SingularSystem(usize),

    #[error("observation mask has no observed entries")]
    EmptyMask,

    #[error("input contains non-finite values")]
    NonFinite,

    #[error("pixel ({row}, {col}) is not covered by any patch")]
    Uncovered { row: usize, col: usize },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("bad magic {:?}, expected {:?}", String::from_utf8_lossy(found), String::from_utf8_lossy(expected))]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("truncated file: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn in_stage(self, stage: impl Into<String>) -> Error {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
