use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),

    #[error("quadrature failed to reach tolerance {tolerance:e} (estimated error {estimate:e})")]
    QuadratureFailure { tolerance: f64, estimate: f64 },

    #[error("non-finite value at node {node}: {value}")]
    NonFinite { node: usize, value: f64 },

    #[error(
        "C0 bound violated at t = {time}: range [{min}, {max}] leaves [{lower}, {upper}]; \
         try a smaller dt_safety"
    )]
    CflViolation {
        time: f64,
        min: f64,
        max: f64,
        lower: f64,
        upper: f64,
    },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
