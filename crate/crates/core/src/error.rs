use thiserror::Error;

/// Errors produced by the library. Each variant maps onto one CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// The model is ill-formed (dimension mismatch, missing range, overflow...).
    #[error("model definition error: {0}")]
    ModelDefinition(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("enumeration budget exceeded: {required} states required, budget is {budget}")]
    Budget { required: u128, budget: u128 },

    #[error("contraction not certified: C1(1+C2) = {lhs:.6} >= 1 (use the gate override to iterate anyway)")]
    NotCertified { lhs: f64 },

    #[error("iteration did not converge after {iterations} iterations (last update {last_update:.3e}, rate estimate {rate:.4})")]
    Divergence {
        iterations: usize,
        last_update: f64,
        rate: f64,
    },

    /// A precondition on the field failed, e.g. the environment condition.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn model(msg: impl Into<String>) -> Self {
        Error::ModelDefinition(msg.into())
    }
}
