use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature did not converge in {operation}: estimated error {error:.3e} exceeds tolerance {tolerance:.3e}")]
    NonConvergence {
        operation: &'static str,
        error: f64,
        tolerance: f64,
    },

    #[error("degenerate protocol: the integral of y0 vanishes at t = {t:e}")]
    DegenerateProtocol { t: f64 },

    #[error("no bracket: the uncertainty is monotone over [{lo:e}, {hi:e}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("ensemble of {n} qubits exceeds the configured maximum of {max}")]
    SizeLimit { n: usize, max: usize },

    #[error("degenerate fit input: {0}")]
    DegenerateFit(String),

    #[error("backend {backend} cannot handle {reason}")]
    IncompatibleBackend { backend: &'static str, reason: String },

    #[error("density matrix is not positive semidefinite (trace {trace:e})")]
    NotPositive { trace: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn require_finite(name: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::invalid(name, format!("must be finite, got {x}")))
    }
}
