use thiserror::Error;

use crate::measurement::PhaseEstimate;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Cayley parametrization undefined: |det(S+I)| = {det:e}")]
    SingularCayley { det: f64 },
    #[error("no factorization S = S'S'' found with both factors away from eigenvalue -1")]
    FactorizationFailed,
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("argument of zero is undefined")]
    UndefinedArgument,
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("insufficient Fock cutoff: truncation defect {defect:e} exceeds {limit:e}")]
    InsufficientCutoff { defect: f64, limit: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("degenerate system: {0}")]
    DegenerateSystem(String),
    #[error("ill-conditioned inversion: {0}")]
    IllConditioned(String),
    #[error("inconsistent phases: {0}")]
    InconsistentPhases(String),
    #[error("invalid estimate: {0}")]
    InvalidEstimate(String),
    #[error("phase magnitude {} below floor; arg is unreliable", .0.magnitude_hat)]
    UnreliablePhase(Box<PhaseEstimate>),
    #[error("missing blocks: {}", .0.join(", "))]
    IncompleteInput(Vec<String>),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
