use thiserror::Error;

/// Errors reported by population construction, samplers, and bound solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("index sampler exhausted: requested {requested}, only {remaining} of {total} indices remain")]
    Exhausted {
        requested: usize,
        remaining: usize,
        total: usize,
    },

    #[error("non-finite reward at arm {arm}, index {index}: {value}")]
    NonFiniteReward { arm: usize, index: usize, value: f64 },

    #[error("no range bound available for arm {arm}; supply one explicitly or use a materialized population")]
    MissingRangeBound { arm: usize },

    #[error("population shape mismatch: {0}")]
    Shape(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
