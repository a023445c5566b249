use thiserror::Error;

/// Errors shared by every simulation module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    /// An input is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed (non-convergence, NaN, divergence).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A caller violated an interface contract (missing channel, mismatched binning).
    #[error("contract error: {0}")]
    Contract(String),

    /// An element of a sweep or Monte Carlo run failed.
    #[error("failed at index {index}: {source}")]
    AtIndex {
        index: usize,
        #[source]
        source: Box<SimError>,
    },
}

impl SimError {
    pub fn domain(msg: impl Into<String>) -> Self {
        SimError::Domain(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        SimError::Numerical(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        SimError::Contract(msg.into())
    }

    /// True when the root cause is a numerical failure.
    pub fn is_numerical(&self) -> bool {
        match self {
            SimError::Numerical(_) => true,
            SimError::AtIndex { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
