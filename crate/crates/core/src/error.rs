use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A constellation, code or run configuration is not supported or invalid.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// An argument is outside the domain of the operation.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Neighbor selection was asked for a subset geometry it cannot handle.
    #[error("unsupported subset geometry: {0}")]
    UnsupportedGeometry(String),
    /// A transform was evaluated outside its region of convergence.
    #[error("outside the convergence strip: {0}")]
    Domain(String),
    /// Numerical quadrature did not converge.
    #[error("numerical failure: {message} (nodes = {nodes}, last relative change = {last_change:e})")]
    Numerical {
        message: String,
        nodes: usize,
        last_change: f64,
    },
    /// A grid verification cannot resolve the feature it is asked to check.
    #[error("verification inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, Error>;
