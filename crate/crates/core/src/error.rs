use thiserror::Error;

/// Error type for every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown factor label `{0}`")]
    UnknownFactor(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator `{name}` is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { name: String, deviation: f64 },

    #[error("expectation value has imaginary part {0:.3e}; operator is not Hermitian")]
    ImaginaryExpectation(f64),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("wave packet leaks out of the grid (boundary amplitude {0:.3e})")]
    PacketLeakage(f64),

    #[error("Fock truncation violated: top-level population {0:.3e}")]
    FockTruncation(f64),

    #[error("system state is not an eigenstate of H_S (residual {0:.3e})")]
    NotEigenstate(f64),

    #[error(
        "degenerate levels couple: |ΔE| = {gap:.3e} with matrix element {element:.3e} \
         between system levels {system_from}->{system_to}, apparatus levels {apparatus_from}->{apparatus_to}"
    )]
    Degeneracy {
        gap: f64,
        element: f64,
        system_from: usize,
        system_to: usize,
        apparatus_from: usize,
        apparatus_to: usize,
    },

    #[error("norm drifted by {0:.3e} during propagation")]
    NormDrift(f64),

    #[error("time {t} outside coupling window [0, {total}]")]
    TimeOutOfRange { t: f64, total: f64 },

    #[error("fit needs at least {needed} points spanning a decade, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("numerical check failed: {0}")]
    Numeric(String),

    #[error("heterogeneous trace parameters: {0}")]
    Heterogeneous(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Coarse classification used by front ends to pick exit codes.
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Json(_) | Io(_) | Csv(_) => ErrorKind::Config,
            Eigen(_) | NormDrift(_) | ImaginaryExpectation(_) | Numeric(_) => ErrorKind::Numeric,
            _ => ErrorKind::Validation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Validation,
    Numeric,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
