use thiserror::Error;

/// Errors produced anywhere in the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid or inconsistent configuration (bad mesh, bad interval, size mismatch, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A function was evaluated outside the set where it is defined.
    #[error("domain error: {what} (argument {value:e}, admissible range {range})")]
    Domain {
        what: &'static str,
        value: f64,
        range: String,
    },

    /// Newton iteration failed inside an implicit time step.
    #[error(
        "newton failure at t = {t}: residual {residual:e} after {iterations} iterations (dt = {dt})"
    )]
    Newton {
        t: f64,
        dt: f64,
        residual: f64,
        iterations: usize,
    },

    /// Non-finite value while integrating a scalar ODE.
    #[error("ode solver error: {0}")]
    Solver(String),

    /// Fitting or calibration could not be performed on the given series.
    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
