use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An exponential would have been evaluated past the overflow guard.
    #[error("nonlinearity saturated: exponential argument {arg} exceeds guard (s = {s})")]
    Saturation { s: f64, arg: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("field lives on a different grid ({got} cells, expected {expected})")]
    GridMismatch { expected: usize, got: usize },

    #[error("ODE step size underflow at r = {r}")]
    StepUnderflow { r: f64 },

    #[error("no ground state in defocusing sign")]
    DefocusingGroundState,

    #[error("no shooting bracket found in a in [{lo:e}, {hi:e}]; outcomes: {outcomes}")]
    NoBracket { lo: f64, hi: f64, outcomes: String },

    #[error("singular Newton Jacobian at iteration {iteration} (residual {residual:e})")]
    SingularJacobian { iteration: usize, residual: f64 },

    #[error("Newton did not converge after {iterations} steps (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Saturation { .. }
                | Error::NonFinite { .. }
                | Error::StepUnderflow { .. }
                | Error::DefocusingGroundState
                | Error::NoBracket { .. }
                | Error::SingularJacobian { .. }
                | Error::NewtonDiverged { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
