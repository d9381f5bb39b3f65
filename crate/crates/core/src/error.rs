use std::fmt;

/// Which linear solver raised a [`Error::Solver`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    Direct,
    Cg,
}

impl fmt::Display for SolverMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverMode::Direct => f.write_str("direct"),
            SolverMode::Cg => f.write_str("cg"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("non-conforming mesh: {0}")]
    Conformity(String),

    #[error("point ({x}, {y}) is outside all elements")]
    Location { x: f64, y: f64 },

    #[error("{mode} solver failed: {msg}")]
    Solver { mode: SolverMode, msg: String },

    #[error("matrix is not positive definite: {0}")]
    Definiteness(String),

    #[error("coefficient data error: {0}")]
    Data(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
