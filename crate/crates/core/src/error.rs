use thiserror::Error;

/// Errors raised by the analytic models, the simulator and the file loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside the domain ({expected})")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    Convergence { estimate: f64, error_bound: f64 },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("degenerate interferer powers: {0}")]
    DegenerateRoots(String),

    #[error("closed-form sum is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("closed-form expansion needs {terms} terms, cap is {cap}; use the quadrature path")]
    Complexity { terms: u128, cap: u128 },

    #[error("expected SINR is infinite: noise power is zero while interferers are present")]
    InfiniteMean,

    #[error("population has heterogeneous resource blocks; the unique-MCS model needs identical laws on every RB")]
    HeterogeneousRbs,

    #[error("simulation produced a non-finite value: {0}")]
    NonFinite(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_finite_positive(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            what,
            value,
            expected: "finite and > 0",
        })
    }
}
