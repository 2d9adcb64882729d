use thiserror::Error;

/// Errors raised by the tensor, model, sampling and IRF layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid arguments: bad mode index, shape mismatch, invalid hyperparameter.
    #[error("domain error: {0}")]
    Domain(String),
    /// A decomposition or a draw failed numerically (non-PD matrix, non-finite value).
    #[error("numerical error: {0}")]
    Numerical(String),
    /// A sampler step failed; carries the 1-based iteration index.
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("aborted by user")]
    Aborted,
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn at_iteration(self, iteration: usize) -> Self {
        match self {
            Error::Aborted => Error::Aborted,
            e @ Error::AtIteration { .. } => e,
            e => Error::AtIteration {
                iteration,
                source: Box::new(e),
            },
        }
    }

    /// True for numerical failures, including those wrapped with an iteration index.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical(_) => true,
            Error::AtIteration { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
