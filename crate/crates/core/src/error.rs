use thiserror::Error;

/// Errors produced by the geometry, quadrature and functional layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected n = {expected}, found n = {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point has non-finite coordinates")]
    NonFinitePoint,

    #[error("undefined input: {0}")]
    Undefined(&'static str),

    #[error("evaluation at the singular point of the distance function")]
    SingularPoint,

    #[error("vector-field index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("field has no exact partials and no finite-difference step was supplied")]
    MissingPartials,

    #[error("finite-difference step too large: h = {h} reaches a non-smooth point at distance {distance}")]
    StepTooLarge { h: f64, distance: f64 },

    #[error("non-finite integrand value {value} at node {index}")]
    NonFiniteNode { index: usize, value: f64 },

    #[error("integrand is not integrable: {0}")]
    NonIntegrable(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("empty or degenerate region")]
    EmptyRegion,
}

pub type Result<T> = std::result::Result<T, Error>;
