use std::path::PathBuf;

use thiserror::Error;

use crate::dewey::DeweyId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("document `{doc}` is not well-formed at {line}:{column}: {message}")]
    MalformedXml {
        doc: String,
        line: u32,
        column: u32,
        message: String,
    },

    #[error("document `{0}` was already ingested")]
    DuplicateDocument(String),

    #[error("node {0} not found")]
    NodeNotFound(DeweyId),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid query at offset {position}: {message}")]
    InvalidQuery { position: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid selection for term {term}: {message}")]
    InvalidSelection { term: usize, message: String },

    #[error("unknown connection id `{0}`")]
    UnknownConnection(String),

    #[error("planning failed: terms {0} and {1} are not joined by any chosen connection")]
    UncoveredPair(usize, usize),

    #[error("planning failed: {0}")]
    Planning(String),

    #[error("catalog: {0}")]
    Catalog(String),

    #[error("key violation in `{entry}`: nodes {first} and {second} share key ({key})")]
    DuplicateKey {
        entry: String,
        first: DeweyId,
        second: DeweyId,
        key: String,
    },

    #[error("key path `{path}` of `{entry}` does not resolve to exactly one node for {node}")]
    UnresolvableKey {
        entry: String,
        node: DeweyId,
        path: String,
    },

    #[error("augmentation failed for {} row(s); first: {}", .0.len(), .0.first().map(String::as_str).unwrap_or(""))]
    RowErrors(Vec<String>),

    #[error("state error: {0}")]
    State(String),

    #[error("store at {0} is missing `{1}`; run the corresponding build step first")]
    MissingArtifact(PathBuf, &'static str),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
