use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid profile or run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A hypothesis required by the construction does not hold.
    #[error("hypothesis {name} violated: {detail}")]
    Hypothesis { name: String, detail: String },

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {intervals} intervals")]
    Quadrature {
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("fit failed: {0}")]
    Fit(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn hypothesis(name: &str, detail: impl Into<String>) -> Self {
        Error::Hypothesis {
            name: name.to_string(),
            detail: detail.into(),
        }
    }

    /// True for failures of the numerical machinery, as opposed to bad
    /// input or violated hypotheses.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. } | Error::RootFinding(_) | Error::Integration(_) | Error::Fit(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
