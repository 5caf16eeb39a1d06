use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cycle detected: {}", .witness.join(" -> "))]
    CycleDetected { witness: Vec<String> },

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("digraph has no nodes")]
    EmptyDigraph,

    #[error("instance of size {size} exceeds the exact computation cap {cap}")]
    TooLargeForExact { size: usize, cap: usize },

    #[error("duplicate data entry `{0}`")]
    DuplicateEntry(String),

    #[error("duplicate node `{0}`")]
    DuplicateNode(String),

    #[error("entries `{first}` and `{second}` both have color {color} and both contain node `{node}`")]
    ColorCollision {
        node: String,
        color: u32,
        first: String,
        second: String,
    },

    #[error("coloring does not match the function: {0}")]
    ColoringMismatch(String),

    #[error("malformed csv at line {line}: {reason}")]
    MalformedCsv { line: u64, reason: String },

    #[error("line {line} has {found} fields, expected {expected}")]
    InconsistentArity {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("malformed query expression: {0}")]
    MalformedExpr(String),

    #[error("fact table is empty")]
    EmptyFactTable,

    #[error("input collection is empty")]
    EmptyInput,

    #[error("invalid range [{a}, {b}]")]
    InvalidRange { a: f64, b: f64 },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("measure sum overflowed")]
    Overflow,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::MalformedCsv {
                line,
                reason: format!("{other:?}"),
            },
        }
    }
}
