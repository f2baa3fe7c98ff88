use thiserror::Error;

/// Errors raised by the causal-order library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// A function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A combinatorial guard was hit.
    #[error("size limit exceeded: {what} = {value} (max {max})")]
    SizeLimit {
        what: &'static str,
        value: usize,
        max: usize,
    },

    /// Input collection was empty where at least one element is required.
    #[error("empty input: {0}")]
    Empty(&'static str),

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error(
        "quadrature did not converge: value {value:.6e}, error estimate {error:.3e} \
         (requested {requested:.3e}) after {subdivisions} subdivisions"
    )]
    Quadrature {
        value: f64,
        error: f64,
        requested: f64,
        subdivisions: usize,
    },

    /// Generic numerical failure (non-finite values, grid resolution, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The quantum superposition state cannot be normalised.
    #[error("degenerate state: normalisation denominator {0:.3e} too small")]
    DegenerateState(f64),

    /// Norm drift of the amplitude evolution exceeded the allowed bound.
    #[error("norm drift {drift:.3e} exceeds bound {bound:.3e}; reduce the time step")]
    NormDrift { drift: f64, bound: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
