use num_complex::Complex64 as C64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: String, reason: String },

    #[error("Hilbert-space dimension {dim} exceeds the configured cap {cap}")]
    Capacity { dim: usize, cap: usize },

    /// The Liouvillian has more than one stationary state. `basis` holds
    /// vectorized (row-major) null-space vectors when they could be computed.
    #[error("steady state is degenerate (multiplicity {multiplicity})")]
    DegenerateSteadyState {
        multiplicity: usize,
        basis: Vec<Vec<C64>>,
    },

    #[error("step size underflow at t = {t:e}; lower the Fock cutoff or loosen the tolerance")]
    Stiffness { t: f64 },

    #[error("zero steady-state intensity in channel `{0}`, normalization undefined")]
    ZeroIntensity(String),

    #[error("delay grid is not symmetric about zero")]
    AsymmetricGrid,

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("dissipative matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("drift matrix is not Hurwitz: {0}")]
    Unstable(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("parameter not identifiable: {0}")]
    Unidentifiable(String),

    #[error("truncation: {0}")]
    Truncation(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
}

impl Error {
    pub fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
