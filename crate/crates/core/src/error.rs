use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    /// A record could not be decoded. `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A record decoded but violates the file schema. `line` is 1-based.
    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },

    /// CoNLL-U content error inside sentence `sentence` (0-based).
    #[error("conllu error in sentence {sentence} (line {line}): {message}")]
    Conllu {
        sentence: usize,
        line: usize,
        message: String,
    },

    /// Dependency structure is not a single rooted tree.
    #[error("structure error in sentence {sentence}: {message}")]
    Structure { sentence: usize, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("external adapter failed: {0}")]
    Adapter(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Whether the error stems from bad input data rather than a bad invocation.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Argument(_) | Error::Config(_))
    }
}
