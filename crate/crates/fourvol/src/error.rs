//! Error types shared across the estimation pipeline.

use thiserror::Error;

/// Errors produced by the estimation pipeline.
///
/// The variants are grouped by which stage of the pipeline rejects the
/// input, so a caller (e.g. the CLI) can map them to distinct exit codes.
#[derive(Debug, Clone, Error)]
pub enum VolError {
    /// Invalid configuration (window lengths, grid sizes, parameters).
    #[error("configuration error: {0}")]
    Config(String),

    /// A tuning-parameter combination violates the frequency-availability
    /// constraints imposed by discrete sampling.
    #[error("tuning error: {0}")]
    Tuning(String),

    /// Malformed or inconsistent input data.
    #[error("data error: {0}")]
    Data(String),

    /// A functional was evaluated outside its domain (e.g. matrix inverse
    /// or log at a singular point); carries the offending minimum eigenvalue.
    #[error("domain error: {0} (min eigenvalue {1:.6e})")]
    Domain(String, f64),

    /// Failure while assembling a plug-in estimate.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Failure in the inference layer (e.g. non-positive variance estimate).
    #[error("inference error: {0}")]
    Inference(String),

    /// Sampling produced an unusable observation grid.
    #[error("sampling error: {0}")]
    Sampling(String),

    /// Numerical breakdown not attributable to user input.
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, VolError>;
