use thiserror::Error;

use crate::game::WeightCondition;
use crate::lp::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("weight matrix rejected: {0}")]
    Weight(WeightCondition),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Lp(#[from] LpError),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("optimizer did not converge after {iterations} iterations (residual {residual:e}); iterate = {iterate:?}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        iterate: Vec<f64>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
