//! Error types shared across the laboratory.

use thiserror::Error;

/// Everything that can go wrong in a lab computation.
///
/// Numerical gates (leakage, quadrature resolution) are errors rather than
/// warnings: a result produced outside its validity window is not a result.
#[derive(Debug, Error)]
pub enum LabError {
    /// Mass in the outer shell of the periodic box exceeded the configured
    /// tolerance, so the box no longer emulates free space.
    #[error("boundary-shell mass {mass:.3e} exceeds leakage tolerance {tolerance:.3e}")]
    LeakageExceeded { mass: f64, tolerance: f64 },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    /// Mixed-norm exponents do not satisfy the scaling relation, or a
    /// primal/dual spec was passed where the other side was required.
    #[error("exponent mismatch: {0}")]
    ExponentMismatch(String),

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    /// Phase-space coefficients too close to degenerate for the requested
    /// construction or bound.
    #[error("degenerate phase-space coefficients: {0}")]
    DegenerateCoeffs(String),

    #[error("space-time Fourier transform unavailable: {0}")]
    FourierUnavailable(String),

    /// Halving the quadrature step moved the result by more than the gate.
    #[error("quadrature under-resolved: relative change {rel_change:.3e} exceeds gate {gate:.3e}")]
    QuadratureUnderresolved { rel_change: f64, gate: f64 },

    #[error("inadmissible multilinear exponents: {0:?}")]
    InadmissibleExponents(Vec<crate::quadrature::HlsViolation>),

    /// A sweep point left the semiclassical parameter regime.
    #[error("semiclassical regime violated: {0}")]
    RegimeViolated(String),

    #[error("insufficient data: need at least {needed} rows, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
