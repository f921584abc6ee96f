use std::fmt;

use thiserror::Error;

/// Which quantizer axis a value failed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::X => f.write_str("x"),
            Axis::Y => f.write_str("y"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{axis} value {value} outside [{lo}, {hi}]")]
    OutOfRange {
        axis: Axis,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("index {index} out of bounds for {what} of size {len}")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("plane {plane}: {source}")]
    Plane { plane: usize, source: Box<Error> },

    #[error("sample {index}: {source}")]
    Sample { index: usize, source: Box<Error> },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("model is untrained: every column of plane {plane} is empty")]
    Untrained { plane: usize },

    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse {
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("corrupt state file: {0}")]
    CorruptState(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Innermost error after peeling plane/sample context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Plane { source, .. } | Error::Sample { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn in_plane(self, plane: usize) -> Error {
        Error::Plane {
            plane,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_sample(self, index: usize) -> Error {
        Error::Sample {
            index,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
