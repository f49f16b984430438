use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("unknown identifier `{name}` at byte {position}")]
    UnknownIdentifier { name: String, position: usize },

    #[error("evaluation produced a non-finite value at (t, x) = {point:?}")]
    Evaluation { point: [f64; 4] },

    #[error("coefficient matrix is not symmetric: entry ({row}, {col}) differs from ({col}, {row})")]
    NotSymmetric { row: usize, col: usize },

    #[error("coefficient matrix is not positive definite at x = {point:?} (smallest eigenvalue {eigenvalue})")]
    NotPositiveDefinite { point: Vec<f64>, eigenvalue: f64 },

    #[error("coefficient depends on a disallowed variable: {0}")]
    Dependency(String),

    #[error("operator order overflow: {0}")]
    OrderOverflow(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("blow-up at t = {time}: mass {mass} exceeds {limit}")]
    BlowUp { time: f64, mass: f64, limit: f64 },

    #[error("weighted integrand not negligible at the box boundary (ratio {ratio:e} > {tolerance:e})")]
    BoundaryMass { ratio: f64, tolerance: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("support constraint: {0}")]
    Support(String),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
