use std::io;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    /// Structural problem in an input file.
    #[error("format error: {0}")]
    Format(String),

    /// A numeric field could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate token '{token}' at line {line}")]
    DuplicateToken { token: String, line: usize },

    /// The file ended before the declared content was read.
    #[error("length error: {0}")]
    Length(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    /// A caller-supplied parameter is out of range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Non-finite input or a failed numeric routine.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A result does not fit the floating point range.
    #[error("range error: {0}")]
    Range(String),

    #[error("undefined similarity: {0}")]
    UndefinedSimilarity(String),

    #[error("degenerate ranking: {0}")]
    DegenerateRanking(String),

    #[error("token not found: {0}")]
    NotFound(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("no vectors")]
    NoVectors,
}

pub type Result<T> = std::result::Result<T, Error>;
