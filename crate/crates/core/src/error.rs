use thiserror::Error;

/// Errors raised by the model, solver and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("ill-conditioned sigmoid knots: {0}")]
    IllConditionedSigmoid(String),

    #[error("maturity coordinate {0} outside [0, 1]")]
    MaturityOutOfRange(f64),

    #[error("CFL condition violated: {0}")]
    CflViolation(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("no nonzero steady state exists for these parameters")]
    NoNonzeroSteadyState,

    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),

    #[error("no bracketing interval found: {0}")]
    NoBracket(String),

    #[error("evaluation too close to a pole at lambda = {re} + {im}i")]
    PoleProximity { re: f64, im: f64 },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
