//! Error types shared across the simulator.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error in {context}: {message}")]
    Domain { context: &'static str, message: String },

    /// A quadrature or iterative scheme failed to converge.
    #[error("numerical failure in {context}: {message}")]
    Numerical { context: &'static str, message: String },

    /// Scenario/configuration validation failed. Each entry names the
    /// offending field path and the violated invariant.
    #[error("invalid configuration:\n{}", violations.join("\n"))]
    Config { violations: Vec<String> },

    /// A covariance matrix produced symplectic eigenvalues below 1,
    /// i.e. the parameter regime left the model's validity range.
    #[error("unphysical Gaussian state in {context}: symplectic eigenvalues {eigenvalues:?}")]
    Unphysical {
        context: &'static str,
        eigenvalues: Vec<f64>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimError {
    pub fn domain(context: &'static str, message: impl Into<String>) -> Self {
        SimError::Domain {
            context,
            message: message.into(),
        }
    }

    pub fn numerical(context: &'static str, message: impl Into<String>) -> Self {
        SimError::Numerical {
            context,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
