//! Error type shared by all modules.

use thiserror::Error;

/// Failures reported by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("orientation lost: derivative {value:.3e} at sample {index}")]
    Orientation { index: usize, value: f64 },
    #[error("logarithm branch: winding number {winding} around 0")]
    Branch { winding: i64 },
    #[error("singular value encountered: {0}")]
    Singular(String),
    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    Solver { iterations: usize, residual: f64 },
    #[error("inadmissible input: {0}")]
    Inadmissible(String),
    #[error("boundary curves do not match (defect {defect:.3e})")]
    Geometry { defect: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("map is not univalent: {0}")]
    NotUnivalent(String),
}

/// Result alias.
pub type Result<T> = std::result::Result<T, Error>;
