use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument outside the domain of {function}: {detail}")]
    Domain { function: &'static str, detail: String },

    #[error("{function} has a pole at {at}")]
    Pole { function: &'static str, at: f64 },

    #[error("singular configuration: {0}")]
    Singular(String),

    #[error("parameter out of range: {0}")]
    Range(String),

    #[error("lattice must have unit covolume, got {0}")]
    Normalization(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("quadrature did not reach tolerance {target:e} (estimated error {achieved:e})")]
    Accuracy { achieved: f64, target: f64 },

    #[error("optimizer failed to converge after {iterations} iterations (last energy {energy}, gradient norm {grad_norm:e})")]
    Convergence { iterations: usize, energy: f64, grad_norm: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            function,
            detail: detail.into(),
        }
    }
}
