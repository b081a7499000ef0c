use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid UTF-8 at byte offset {offset}")]
    Encoding { offset: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("duplicate document number {0:?}")]
    DuplicateDocno(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("document has no tokens after stopword removal")]
    DegenerateDocument,

    #[error("no query term occurs in the document")]
    NoKeyword,

    #[error("term {0:?} occurs in no partition")]
    UndefinedIdf(String),

    #[error("partition is empty")]
    EmptyPartition,

    #[error("query is empty after stopword removal")]
    EmptyQuery,

    #[error("runs cover different topics (symmetric difference: {0:?})")]
    TopicMismatch(Vec<u32>),

    #[error("configuration: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Attach the path of the file being read.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::InFile {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// True when the error comes from broken internal state rather than bad input.
    pub fn is_internal(&self) -> bool {
        match self {
            Error::Invariant(_) | Error::EmptyPartition | Error::UndefinedIdf(_) => true,
            Error::InFile { source, .. } => source.is_internal(),
            _ => false,
        }
    }
}
