use thiserror::Error;

/// Errors raised by the state, Stokes, filtering, measure and estimator layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NonHermitianInput(f64),
    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),
    #[error("state is not normalized (trace {0})")]
    NotNormalized(f64),
    #[error("invalid subsystem selection: {0}")]
    BadSubsystem(String),
    #[error("unknown or malformed state name: {0}")]
    BadStateName(String),
    #[error("rank {rank} is outside 1..={max}")]
    BadRank { rank: usize, max: usize },
    #[error("expected {expected} entries, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operator is singular (|det| = {0:e})")]
    NotInvertible(f64),
    #[error("operator determinant {0} differs from 1")]
    NotUnimodular(String),
    #[error("filter removed the whole ensemble (S_0..0 = {0:e})")]
    EnsembleAnnihilated(f64),
    #[error("operation requires {expected} qubits, got {got}")]
    WrongQubitCount { expected: usize, got: usize },
    #[error("value {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("three-tangle came out negative ({0:e})")]
    NegativeTangle(f64),
    #[error("identity residual {residual:e} exceeds bound for {identity}")]
    IdentityViolation { identity: String, residual: f64 },
    #[error("shot count must be positive")]
    ZeroShots,
    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
