use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("hyperedge {edge} references node {node}, outside [0, {n})")]
    NodeOutOfRange { edge: usize, node: usize, n: usize },

    #[error("hyperedge {0} is empty")]
    EmptyHyperedge(usize),

    #[error("hyperedge {edge} lists node {node} more than once")]
    DuplicateMember { edge: usize, node: usize },

    #[error("node {0} belongs to no hyperedge")]
    IsolatedNode(usize),

    #[error("normalization group {0} has no supported positions")]
    EmptyGroup(usize),

    #[error("label {label} at row {row} is outside [0, {classes})")]
    LabelOutOfRange { row: usize, label: usize, classes: usize },

    #[error("backward needs a 1x1 loss, got {0}x{1}")]
    NonScalar(usize, usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged: loss is not a number at epoch {0}")]
    Diverged(usize),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("dataset statistic `{field}` mismatch: manifest expects {expected}, found {found}")]
    StatMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
