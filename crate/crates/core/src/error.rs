use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid kernel label {0}")]
    InvalidLabel(String),

    #[error("Gevrey order must exceed 1, got s={0}")]
    InvalidOrder(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("exponent overflow: |k*delta*ln(gamma)| = {0:.3e}")]
    Overflow(f64),

    #[error("quadrature did not converge after {panels} panels (estimate {estimate:.6e}, error {error:.3e})")]
    Convergence {
        estimate: f64,
        error: f64,
        panels: usize,
    },

    #[error("singular argument: {0}")]
    Singular(String),

    #[error("degenerate fit: {0}")]
    FitDegenerate(String),

    #[error("scale window too narrow: boundary mass {boundary:.3e} relative to sum {sum:.3e}")]
    WindowTooNarrow { boundary: f64, sum: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last step {step:.3e})")]
    NoFixedPoint { iterations: usize, step: f64 },

    #[error("divergent chain resummation for label {0}")]
    DivergentChain(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),
}

pub type Result<T> = std::result::Result<T, Error>;
