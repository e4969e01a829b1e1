use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported dimension n = {0} (supported range 3..=8)")]
    UnsupportedDimension(usize),

    #[error("mass m = {m} outside (0, m_max) = (0, {max}) for n = {n}")]
    MassOutOfRange { n: usize, m: f64, max: f64 },

    #[error("mass m = {m} is within 1e-6 of m_max = {max}; profile generation rejected")]
    NearExtremal { m: f64, max: f64 },

    #[error("{what} = {value} outside admissible range {expected}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        expected: String,
    },

    #[error("{what}: 0/0 endpoint limit at u = {u}; use {hint}")]
    EndpointLimit {
        what: &'static str,
        u: f64,
        hint: &'static str,
    },

    #[error("no sign change on [{a}, {b}] (f(a) = {fa}, f(b) = {fb})")]
    NoBracket { a: f64, b: f64, fa: f64, fb: f64 },

    #[error("quadrature failed to reach tolerance {tol} on [{a}, {b}]")]
    Quadrature { a: f64, b: f64, tol: f64 },

    #[error("constraint residual {residual:e} exceeds tolerance {tol:e} at r = {r}")]
    ConstraintDrift { r: f64, residual: f64, tol: f64 },

    #[error("integrator step failure at r = {r}: {reason}")]
    StepFailure { r: f64, reason: &'static str },

    #[error("areal radius collapsed (rho = {rho}) at r = {r}")]
    Collapse { r: f64, rho: f64 },

    #[error("no horizon reached within |r| <= {max_range}")]
    NoHorizon { max_range: f64 },

    #[error("insufficient grid: {0}")]
    InsufficientGrid(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("monotonicity precondition failed for n = {0}")]
    NotMonotone(usize),
}

impl Error {
    pub(crate) fn out_of_range(what: &'static str, value: f64, expected: impl Into<String>) -> Self {
        Error::OutOfRange {
            what,
            value,
            expected: expected.into(),
        }
    }
}
