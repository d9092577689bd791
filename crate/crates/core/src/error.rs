use thiserror::Error;

/// Errors produced by the analysis, optimization and learning routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("{function} did not converge after {iterations} iterations (argument {argument})")]
    NoConvergence {
        function: &'static str,
        iterations: usize,
        argument: f64,
    },

    #[error("argument {argument} outside the domain of {function}")]
    Domain { function: &'static str, argument: f64 },

    #[error("quadrature failed after {subdivisions} subdivisions near {worst_at}: estimate {estimate:e}, error {error:e}")]
    Quadrature {
        subdivisions: usize,
        estimate: f64,
        error: f64,
        /// Center of the segment with the largest error estimate.
        worst_at: f64,
    },

    #[error("analytical evaluation failed at y = {abscissa}: {reason}")]
    Analytical { abscissa: f64, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite value during training at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("non-finite forward activation in layer {layer}")]
    NonFinite { layer: usize },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("malformed model record at line {line}: {reason}")]
    ModelFormat { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        field,
        reason: reason.into(),
    }
}
