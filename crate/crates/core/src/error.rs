use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::GeometryError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("node {id:?} redeclared with type {found:?} (previously {expected:?})")]
    ConflictingNodeType {
        id: String,
        expected: String,
        found: String,
    },

    #[error("no edges in {0}")]
    EmptyGraph(String),

    #[error("unknown node id {0:?}")]
    UnknownNode(String),

    #[error("node index {0} out of range")]
    NodeOutOfRange(usize),

    #[error("edge at timestamp {got} precedes the latest ingested timestamp {latest}")]
    OutOfOrderEdge { got: i64, latest: i64 },

    #[error("invalid index file: {0}")]
    CorruptIndex(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("walk corpus is empty")]
    EmptyCorpus,

    #[error("requested {requested} absent node pairs but only {available} exist")]
    NotEnoughNonEdges { requested: usize, available: usize },

    #[error("classification needs at least two classes, found {0}")]
    TooFewClasses(usize),

    #[error("class {0} has no members in the training split")]
    Stratification(u32),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error(transparent)]
    Geometry(#[from] GeometryError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
