use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported manifold kind `{0}` (expected circle, torus2 or sphere2)")]
    UnsupportedManifold(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spectral basis would have {requested} entries, above the cap of {cap}")]
    BasisTooLarge { requested: usize, cap: usize },

    #[error("quadrature would have {nodes} nodes, above the cap of {cap}")]
    QuadratureTooLarge { nodes: usize, cap: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("rho = {rho} outside (0, {max})")]
    RhoOutOfRange { rho: f64, max: f64 },

    #[error("oracle grid spacing {spacing} is not below rho/8 = {}", rho / 8.0)]
    GridTooCoarse { spacing: f64, rho: f64 },

    #[error("rho too large for omega: not a sampling set, condition number {condition:e} of the normal matrix exceeds 1e12")]
    NotSamplingSet { condition: f64 },

    #[error("rho too large for omega: minimum weight {min_weight:e} is not positive")]
    RhoTooLarge { min_weight: f64 },

    #[error("rho search exhausted at rho = {rho} without a cubature meeting the positivity margin")]
    SearchExhausted { rho: f64 },

    #[error("basis bandwidth {have} is below the kernel support bound {need}")]
    BasisTooSmall { have: f64, need: f64 },

    #[error("operation undefined for the zero function")]
    ZeroFunction,

    #[error("manifold mismatch: {0}")]
    ManifoldMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("need at least 3 nonvacuous levels, found {found}")]
    InsufficientLevels { found: usize },

    #[error("refused: {0}")]
    Refused(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
