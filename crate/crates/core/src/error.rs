use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("basis labels differ between operands")]
    LabelMismatch,

    #[error("duplicate basis label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown basis label `{0}`")]
    UnknownLabel(String),

    #[error("state norm {norm} deviates from 1 by more than {tolerance:e}")]
    NotNormalized { norm: f64, tolerance: f64 },

    #[error("non-finite Hamiltonian entry at t = {t} ns")]
    NonFinite { t: f64 },

    #[error("matrix is not Hermitian (max |M - M^H| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("eigensolver did not converge: {0}")]
    NotConverged(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("{0} pulses have no analytic derivative")]
    UnsupportedShape(&'static str),

    #[error(
        "rotation angle {delta} is infeasible for m = {m}: admissible interval is (0, {upper})"
    )]
    InfeasibleRotation { delta: f64, m: u32, upper: f64 },

    #[error("level {level} leaks to the grid boundary (relative amplitude {amplitude:e})")]
    BoundaryLeakage { level: usize, amplitude: f64 },

    #[error("flux potential has no double well in the computed window")]
    NoDoubleWell,

    #[error("no computed level lies above the barrier top; request more levels")]
    NoLevelAboveBarrier,

    #[error("dark state undefined: all of Omega_A g, Omega_B g and Omega_A Omega_B vanish")]
    DegenerateDarkState,

    #[error("cavity-vacuum post-selection has zero probability")]
    ZeroPostSelection,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// Process exit status used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Json(_)
            | Error::Io(_)
            | Error::InvalidParameter { .. }
            | Error::InfeasibleRotation { .. }
            | Error::UnknownLabel(_)
            | Error::DuplicateLabel(_)
            | Error::NotNormalized { .. } => 2,
            _ => 3,
        }
    }
}
