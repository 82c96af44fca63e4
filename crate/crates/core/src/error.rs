use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("inconsistent mesh: {0}")]
    Consistency(String),

    #[error("non-conforming mesh: face {face:?} is shared by {count} tetrahedra")]
    NonConforming { face: [usize; 3], count: usize },

    #[error("degenerate element {0}")]
    DegenerateElement(usize),

    #[error("unsupported quadrature degree {degree} (maximum {max})")]
    UnsupportedDegree { degree: usize, max: usize },

    #[error("unsupported polynomial order k={0} (expected 1 or 2)")]
    UnsupportedOrder(usize),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular matrix: factorization broke down at pivot {pivot}")]
    Singular { pivot: usize },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("invalid config: {field}: {msg}")]
    Config { field: String, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }
}
