use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A node id, dimension index or tuple arity does not fit the space.
    #[error("structural error: {0}")]
    Structural(String),

    /// Data that is well formed but violates a domain rule (negative metric,
    /// non-leaf cell, unknown node, cycle in a hierarchy).
    #[error("input error: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// The request exceeds a fixed enumeration or memory guard.
    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("parse error in {}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: u64,
        message: String,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable kind, used in structured CLI and FFI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Structural(_) => "structural",
            Error::Input(_) => "input",
            Error::Config(_) => "config",
            Error::Capacity(_) => "capacity",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }
}
