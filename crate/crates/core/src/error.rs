use thiserror::Error;

/// Errors raised by the map, distortion, quadrature and capacity routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CuspError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("{what} did not converge within {iterations} iterations")]
    Convergence { what: &'static str, iterations: usize },
    #[error("finite-difference stencil at theta = {theta} crosses a sector seam")]
    Seam { theta: f64 },
    #[error("non-finite integrand value at r = {r}, theta = {theta}")]
    Node { r: f64, theta: f64 },
    #[error("invalid condenser masks: {0}")]
    Mask(String),
    #[error("need at least {needed} partial integrals, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("log-space accumulation overflowed")]
    Overflow,
}

pub type Result<T> = std::result::Result<T, CuspError>;
