use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("sampling window [{start}, {end}] is empty")]
    EmptyWindow { start: f64, end: f64 },

    #[error("sampling window [{start}, {end}] exceeds trace duration {total}")]
    WindowOutOfRange { start: f64, end: f64, total: f64 },

    #[error("operation requires variation mode {expected}, spec is in mode {actual}")]
    WrongMode {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("no sampling window up to the cap of {cap_ns} ns meets tolerance {tolerance}")]
    WindowCapExceeded { cap_ns: f64, tolerance: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad IDX magic 0x{found:08x}, expected 0x{expected:08x}")]
    BadMagic {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("{path}: truncated IDX file ({len} bytes, need {needed})")]
    Truncated {
        path: PathBuf,
        len: usize,
        needed: usize,
    },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("dataset split is empty")]
    EmptyDataset,

    #[error("training diverged: non-finite weights after epoch {epoch}")]
    Divergent { epoch: usize },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
