use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Caller violated a precondition (wrong model, bad count, unknown name).
    #[error("usage error: {0}")]
    Usage(String),

    /// A point or parameter lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A map evaluation left the model; carries the offending value.
    #[error("range error: {context} produced {value}, outside the model")]
    Range { context: String, value: Complex64 },

    /// An intermediate value of a composite map left the half-plane on which
    /// its square-root branch is valid.
    #[error("branch error: {0}")]
    Branch(String),

    #[error("no preimage of {target} inside the model")]
    NoPreimage { target: Complex64 },

    #[error("inconsistent estimates: {0}")]
    Inconsistent(String),

    #[error("map is an elliptic automorphism (|multiplier| = 1 at interior fixed point {point})")]
    EllipticAutomorphism { point: Complex64 },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn range(context: impl Into<String>, value: Complex64) -> Self {
        Error::Range {
            context: context.into(),
            value,
        }
    }
}
