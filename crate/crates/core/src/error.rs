use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point must have at least one finite coordinate: {0}")]
    InvalidPoint(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("eps must be positive, got {0}")]
    InvalidEps(f64),

    #[error("operation undefined on an empty set")]
    EmptySet,

    #[error("net would contain {points} points, cap is {cap}; increase eps or the grid cap")]
    NetOverflow { points: u128, cap: u64 },

    #[error("syntax error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("division by a denominator within 1e-12 of zero")]
    DivisionNearZero,

    #[error("denominator interval contains values within 1e-9 of zero; enclosure is unbounded")]
    UnboundedEnclosure,

    #[error("resolution overflow; increase eps (requested {k} subdivisions per axis, cap {cap})")]
    ResolutionOverflow { k: u128, cap: u64 },

    #[error("grid of {cells} cells exceeds the search cap {cap}; increase eps or the grid cap")]
    GridOverflow { cells: u128, cap: u64 },

    #[error("modulus too weak for requested eps")]
    ModulusTooWeak,

    #[error("certified residual {residual} did not reach eps {eps}; supplied modulus is unsound for this map (best point {point:?})")]
    ModulusUnsound {
        point: Vec<f64>,
        residual: f64,
        eps: f64,
    },

    #[error("map left its codomain at {point:?} (image {image:?})")]
    CodomainEscape { point: Vec<f64>, image: Vec<f64> },

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("approximability violated at eps {eps}: x={x:?}, x'={x2:?}, u={u:?}, u'={u2:?}, t={t}, graph distance {dist}")]
    ApproximabilityViolation {
        eps: f64,
        x: Vec<f64>,
        x2: Vec<f64>,
        u: Vec<f64>,
        u2: Vec<f64>,
        t: f64,
        dist: f64,
    },

    #[error("no graph point found within {radius} of the interpolated orbit after {retries} retries (last delta {last_delta}); the map may not be approximable at this eps")]
    GraphSearchExhausted {
        radius: f64,
        retries: u32,
        last_delta: f64,
    },

    #[error("tolerance budget exhausted; decrease eps or refine grid")]
    ToleranceBudgetExhausted,

    #[error("certificate invariant failed: {0}")]
    CertificateFailure(String),

    #[error("internal search failure: {0}")]
    SearchFailure(String),
}
