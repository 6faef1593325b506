use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("simplex stalled after {iterations} iterations ({} basic variables)", basis.len())]
    Stall {
        iterations: usize,
        basis: Vec<usize>,
    },
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("dimension mismatch in {field}: expected {expected}, found {found}")]
    Dimension {
        field: String,
        expected: usize,
        found: usize,
    },
    #[error("non-finite entry at {field}")]
    NonFinite { field: String },
    #[error("ell must be at least 1")]
    EmptyInstance,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("invalid formulation: {0}")]
    Formulation(String),
    #[error("invalid cone: {0}")]
    Cone(String),
    #[error("alpha = {alpha} is too small: no solution certified")]
    AlphaTooSmall { alpha: f64 },
    #[error("lifted program too large: {0}")]
    SizeCap(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Attaches a location (pattern, iteration, level) to a failure.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T>;
}

impl<T, E: Into<Error>> Context<T> for std::result::Result<T, E> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| Error::Context {
            context: what(),
            source: Box::new(e.into()),
        })
    }
}
