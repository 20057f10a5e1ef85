use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The result cannot be represented (overflow or underflow).
    #[error("range error: {0}")]
    Range(String),

    /// The exponent has an eigenvalue with non-positive real part.
    #[error("exponent eigenvalue {re}{im:+}i has non-positive real part")]
    NonPositiveSpectrum { re: f64, im: f64 },

    /// A hypothesis of an existence or admissibility statement is violated.
    #[error("hypothesis violated: {hypothesis} ({detail})")]
    Hypothesis {
        hypothesis: &'static str,
        detail: String,
    },

    /// An adaptive quadrature stopped before reaching its tolerance.
    #[error("quadrature did not converge: estimate {estimate}, error bound {error}")]
    Quadrature { estimate: f64, error: f64 },

    /// A numerical routine failed (ill-conditioning, non-convergence).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The request is valid but not implemented for this configuration.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn hypothesis(hypothesis: &'static str, detail: impl Into<String>) -> Self {
        Error::Hypothesis {
            hypothesis,
            detail: detail.into(),
        }
    }

    /// True for violations of existence or admissibility hypotheses.
    pub fn is_hypothesis(&self) -> bool {
        matches!(self, Error::Hypothesis { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
