use thiserror::Error;

/// Errors raised by the solvers and their building blocks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite entry at position {0}")]
    NonFinite(usize),

    #[error("truncated SVD did not converge after {iterations} iterations (relative change {residual:e})")]
    SvdNotConverged { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("energy diagnostics unavailable: value oracle for {0} is missing")]
    DiagnosticsUnavailable(&'static str),

    #[error("oracle failure at iteration {iteration}: {source}")]
    Oracle {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no sign change of the descent coefficient on (1e-12, 1e3]")]
    NoStepSizeRoot,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
