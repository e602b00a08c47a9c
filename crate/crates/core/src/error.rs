use std::fmt;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid node {node} (graph has {n} slots)")]
    InvalidNode { node: usize, n: usize },

    #[error("node {0} was already removed")]
    RemovedNode(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("{op}: dimension mismatch between {lhs} and {rhs}")]
    Dimension { op: &'static str, lhs: Shape, rhs: Shape },

    #[error("model shape: {0}")]
    ModelShape(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("record {index}: {source}")]
    Record {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    /// Coarse classification used by the command-line driver to pick an exit code.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidNode { .. }
            | Error::RemovedNode(_)
            | Error::InvalidArgument(_)
            | Error::Parse { .. }
            | Error::Generation(_)
            | Error::Io(_)
            | Error::Json(_) => ErrorKind::Input,
            Error::Dimension { .. } | Error::ModelShape(_) | Error::Config(_) => ErrorKind::Shape,
            Error::Numeric(_) => ErrorKind::Numeric,
            Error::Record { source, .. } => source.kind(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Shape,
    Numeric,
}

/// Tensor shape carried in dimension errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape(pub Vec<usize>);

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "]")
    }
}
