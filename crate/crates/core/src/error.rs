use thiserror::Error;

/// Errors produced by the cluster library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pair distance {r} outside the domain of the {model} potential")]
    Domain { model: &'static str, r: f64 },

    #[error("gradient norm {norm:e} is too small to define a direction")]
    DegenerateDirection { norm: f64 },

    #[error("energy is zero, gradient/energy ratio is undefined")]
    UndefinedRatio,

    #[error("numeric breakdown: {0}")]
    NumericBreakdown(String),

    #[error("point ({x}, {y}, {z}) matches more than one lattice site within {tol}")]
    Ambiguous { x: f64, y: f64, z: f64, tol: f64 },

    #[error("point ({x}, {y}, {z}) does not match any lattice site within {tol}")]
    OffLattice { x: f64, y: f64, z: f64, tol: f64 },

    #[error("no candidate sites left for this move")]
    FrontierExhausted,

    #[error("rotation {rotation} carries site {site} off the lattice")]
    SymmetryViolation { rotation: usize, site: usize },

    #[error("catalog integrity: {0}")]
    CatalogIntegrity(String),

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
