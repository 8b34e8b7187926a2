//! Crate-wide error type.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed text input (dataset rows, HDL source). `line` is 1-based.
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Structurally invalid JSON document or wrong schema/version.
    #[error("schema error in {path}: {msg}")]
    Schema { path: String, msg: String },

    /// Shape mismatches: layer dimensions, bus widths, vector lengths.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Netlist is not a DAG; carries up to ten gate ids on the cycle.
    #[error("combinational cycle through gates {0:?}")]
    Cycle(Vec<u32>),

    #[error("unknown cell `{0}`")]
    UnknownCell(String),

    #[error("unknown gate id {0}")]
    UnknownGate(u32),

    #[error("invalid netlist: {0}")]
    InvalidNetlist(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid cell library: {0}")]
    InvalidLibrary(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A checked equivalence or accuracy verification failed.
    #[error("verification failed: {0}")]
    Verification(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
