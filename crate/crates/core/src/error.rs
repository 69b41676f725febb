use thiserror::Error;

/// Errors produced across the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The game, outcome or structure violates a declared invariant.
    #[error("specification error: {0}")]
    Spec(String),

    /// A cost expression evaluated to a non-finite value.
    #[error("evaluation error: {0}")]
    Eval(String),

    /// The operation requires structure the input does not have
    /// (e.g. a congestion backing, or exactly two actions).
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// An enumeration would exceed its size cap.
    #[error("grid too large: {size} points exceeds cap {cap}")]
    GridTooLarge { size: u128, cap: u128 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("numerical breakdown in simplex: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
