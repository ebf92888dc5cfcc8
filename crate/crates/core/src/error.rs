use std::path::PathBuf;

/// Errors produced by every stage of the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported face at line {line}: {arity} vertices (expected 3 or 4)")]
    UnsupportedFace { line: usize, arity: usize },
    #[error("index error at line {line}: vertex index {index} out of range (vertex count {count})")]
    Index {
        line: usize,
        index: i64,
        count: usize,
    },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("degenerate extent: all vertices coincide")]
    DegenerateExtent,
    #[error("degenerate area: mesh has zero total surface area")]
    DegenerateArea,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("decode error at token {index}: {msg}")]
    Decode { index: usize, msg: String },
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("metric {metric} failed: {source}")]
    Metric {
        metric: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("{side} mask selects no positions")]
    MaskEmpty { side: &'static str },
    #[error("numeric overflow in parameter segment {segment}")]
    NumericOverflow { segment: String },
    #[error("degenerate segment {index}: head and tail coincide")]
    DegenerateSegment { index: usize },
    #[error("framing error: {len} tokens is not a multiple of 6")]
    Framing { len: usize },
    #[error("no path between vertices {from} and {to}")]
    NoPath { from: usize, to: usize },
    #[error("invalid path: edge ({0}, {1}) is not a mesh edge")]
    InvalidPath(usize, usize),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn metric(metric: &'static str, source: Error) -> Self {
        Error::Metric {
            metric,
            source: Box::new(source),
        }
    }

    /// True for failures of floating-point arithmetic rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NumericOverflow { .. } | Error::Numeric(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
