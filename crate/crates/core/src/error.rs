use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{routine} failed with info = {info} (info = -1000: eigenvector self-check failed; try OPENBLAS_CORETYPE=Haswell)")]
    Lapack { routine: &'static str, info: i32 },

    #[error("degenerate spectrum: {0}")]
    Degenerate(String),

    #[error("norm drifted by {drift:.3e} at t = {time}")]
    NormDrift { drift: f64, time: f64 },

    #[error("Lyapunov distance rose by {increase:.3e} at step {step}; reduce dt (currently {dt})")]
    LyapunovIncrease { step: usize, increase: f64, dt: f64 },

    #[error("density matrix eigenvalue {value:.3e} at t = {time}; reduce dt (currently {dt})")]
    NegativeEigenvalue { value: f64, time: f64, dt: f64 },

    #[error("trace drifted to {trace} at t = {time}")]
    TraceDrift { trace: f64, time: f64 },

    #[error("{path}:{line}: {message}")]
    Config { path: String, line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Lapack { .. }
                | Error::Degenerate(_)
                | Error::NormDrift { .. }
                | Error::LyapunovIncrease { .. }
                | Error::NegativeEigenvalue { .. }
                | Error::TraceDrift { .. }
        )
    }
}
