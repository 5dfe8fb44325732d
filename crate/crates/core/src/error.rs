use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("layer {layer}: expected input shape {expected:?}, got {got:?}")]
    Shape {
        layer: usize,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("backward called without a cached train-mode forward pass")]
    NoForwardCache,
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("vertex {vertex} out of range for graph with {n_vertices} vertices")]
    VertexOutOfRange { vertex: usize, n_vertices: usize },
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("brute-force oracle limited to {limit} vertices, got {got}")]
    TooLarge { limit: usize, got: usize },
    #[error("class {0} has no seeds")]
    ClassWithoutSeeds(u32),
    #[error("need at least two distinct labels, found {0}")]
    TooFewClasses(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{file}: expected {expected} bytes, got {got}")]
    SizeMismatch {
        file: PathBuf,
        expected: u64,
        got: u64,
    },
    #[error("dataset has no labeled pixels")]
    NoLabeledPixels,
    #[error("label {label} at pixel {pixel} exceeds class count {classes}")]
    LabelOutOfRange { label: u16, pixel: usize, classes: usize },
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
