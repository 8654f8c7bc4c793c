use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("mapping is not a bijection: {0}")]
    NotABijection(String),

    #[error("beta = {0} outside the open interval (0,1)")]
    BetaOutOfRange(f64),

    #[error("step index {step} out of range (schedule has {len} steps)")]
    StepOutOfRange { step: usize, len: usize },

    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("covariance is singular or not positive definite")]
    SingularCovariance,

    #[error("record steps must be sorted strictly increasing")]
    UnsortedRecordSteps,

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("sample dimension {dim} unsupported: {reason}")]
    UnsupportedDimension { dim: usize, reason: String },

    #[error("samples degenerate even after jitter (all k-th neighbour distances zero)")]
    DegenerateSamples,

    #[error("non-positive value ({value}) where strict positivity is required: {context}")]
    NonPositive { value: f64, context: String },

    #[error("time step dt = {dt} violates the positivity bound dt <= {max_dt}")]
    Stability { dt: f64, max_dt: f64 },

    #[error("cell Peclet number {peclet:.3} exceeds 1; refine the grid or shrink the domain")]
    CoarseGrid { peclet: f64 },

    #[error("domain too small: boundary cells hold mass {boundary_mass:.3e} (limit 1e-6)")]
    DomainTooSmall { boundary_mass: f64 },

    #[error("schedule must have a constant beta for the continuum comparison")]
    NonConstantSchedule,

    #[error("density has total mass {mass} where 1 is required")]
    NotNormalised { mass: f64 },

    #[error("invalid CSR structure: {0}")]
    InvalidCsr(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("linear solver did not converge: status {status:?}, relative residual {residual:.3e} after {iterations} iterations")]
    SolverFailed {
        status: crate::linalg::SolveStatus,
        residual: f64,
        iterations: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
