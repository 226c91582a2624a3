use thiserror::Error;

/// Errors raised by the solvers and the batch tooling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry: {0}")]
    Geometry(String),

    #[error("resolution: {0}")]
    Resolution(String),

    #[error("unstable evolution: |value| = {magnitude:e} at level {level}")]
    Stability { level: usize, magnitude: f64 },

    #[error("conjugate gradient did not converge: {iterations} iterations, relative residual {residual:e}")]
    Convergence { iterations: usize, residual: f64 },

    #[error("least-squares iteration stagnated at k = {k}: E went from {previous:e} to {next:e}")]
    Stagnation { k: usize, previous: f64, next: f64 },

    #[error("iteration cap of {max_iters} reached; last monitored value {last_value:e}")]
    MaxIter { max_iters: usize, last_value: f64 },

    #[error("iteration diverged at k = {k}: {reason}")]
    Divergence { k: usize, reason: String },

    #[error("blow-up guard: |y|_inf = {y_inf:e} at k = {k}")]
    BlowUp { k: usize, y_inf: f64 },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl Error {
    /// Process exit status for the batch tool: 2 for a failed linear
    /// subproblem, 3 for a diverging or stalled method, 4 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Convergence { .. } => 2,
            Error::Stability { .. }
            | Error::Stagnation { .. }
            | Error::MaxIter { .. }
            | Error::BlowUp { .. }
            | Error::Divergence { .. } => 3,
            Error::Geometry(_)
            | Error::Resolution(_)
            | Error::Parse { .. }
            | Error::Validation { .. }
            | Error::Io(_) => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
