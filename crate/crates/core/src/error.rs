use thiserror::Error;

/// Errors raised by the numerical kernels and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested route needs something the source model does not provide.
    #[error("capability error: {0}")]
    Capability(String),
    /// Inconsistent or invalid configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// A documented precondition of an approximation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The request would exceed the brute-force resource guard.
    #[error("resource limit: {0}")]
    Resource(String),
    /// The source has Var[X^2] = 0, which the moderate-deviations analysis excludes.
    #[error("degenerate source: {0}")]
    DegenerateSource(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
