use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input: wrong lengths, non-homogeneous cubic, parse failures.
    #[error("invalid input: {0}")]
    Input(String),
    /// A surface family violates a normalization assumption.
    #[error("validation failed: {0}")]
    Validation(String),
    /// Quadratic part vanishes, so the origin is not an ordinary point.
    #[error("degenerate: not an ordinary point ({0})")]
    Degenerate(String),
    /// The cubic part is divisible by the quadratic part (b = c in normal form).
    #[error("genericity violation: {0}")]
    Genericity(String),
    /// An operation was called outside its documented domain.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// |grad f| fell below the configured floor.
    #[error("near-critical point: |grad f| = {grad_norm:e} at ({x:e}, {y:e})")]
    NearCritical { x: f64, y: f64, grad_norm: f64 },
    /// Iterative solver did not converge within its budget.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// Too few traced points to fit a tangent.
    #[error("insufficient sampling: {0}")]
    InsufficientSampling(String),
    /// Branch topology matches none of the expected patterns.
    #[error("unresolved topology: {0}")]
    UnresolvedTopology(String),
    /// Every point of the level curve is a vertex (constant curvature).
    #[error("everywhere-vertex degenerate level k = {0:e}")]
    EverywhereVertex(f64),
    /// No vertex-count change was found in the scanned level range.
    #[error("no transition in window: {0}")]
    NoTransition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
