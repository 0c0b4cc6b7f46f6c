use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive semidefinite: eigenvalue {value:e} at index {index}")]
    NotPsd { index: usize, value: f64 },

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its transpose by {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("dataset must contain at least one sample of dimension at least one")]
    EmptyDataset,

    #[error("non-finite value at sample {row}, coordinate {col}")]
    NonFinite { row: usize, col: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("{} unit(s) too close to an activation kink for the finite-difference step", .units.len())]
    KinkProximity { units: Vec<KinkSite> },

    #[error("training diverged in epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("whitening direction {index} has eigenvalue {eigenvalue:e} and epsilon {epsilon:e}; scale would be infinite")]
    SingularWhitening {
        index: usize,
        eigenvalue: f64,
        epsilon: f64,
    },
}

/// Location of a pre-activation that sits too close to a non-differentiable point.
#[derive(Debug, Clone, PartialEq)]
pub struct KinkSite {
    pub sample: usize,
    /// Human-readable stage, e.g. `encoder[0]` or `decoder[1]` or `code`.
    pub stage: String,
    pub unit: usize,
    pub value: f64,
}

pub type Result<T> = core::result::Result<T, Error>;
