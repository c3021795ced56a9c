use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows} rows, row {row} has {cols} entries")]
    NotSquare {
        rows: usize,
        row: usize,
        cols: usize,
    },

    #[error("matrix dimension must be at least 1")]
    EmptyMatrix,

    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: ||M - M^H||_F = {deviation:e} exceeds {bound:e}")]
    NotHermitian { deviation: f64, bound: f64 },

    #[error("Jacobi diagonalization did not converge within {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension {0}: must be at least 2")]
    InvalidDimension(usize),

    #[error("invalid rank {rank} for dimension {dim}: must satisfy 1 <= rank <= dim")]
    InvalidRank { rank: usize, dim: usize },

    #[error("trace is {trace:e}, expected 1 within {tol:e}")]
    TraceNotOne { trace: f64, tol: f64 },

    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e} below -{tol:e}")]
    NotPsd { min_eigenvalue: f64, tol: f64 },

    #[error("reference state is not pure: purity {purity} differs from 1 by more than {tol:e}")]
    NotPure { purity: f64, tol: f64 },

    #[error("state vector norm {norm} differs from 1 by more than {tol:e}")]
    NotNormalized { norm: f64, tol: f64 },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error(
        "{0} is not prime; only prime dimensions have a mutually unbiased basis construction here"
    )]
    NotPrime(usize),

    #[error("requested {requested} bases but dimension {dim} admits at most {max}")]
    TooManyBases {
        requested: usize,
        dim: usize,
        max: usize,
    },

    #[error("basis matrix is not unitary: ||U^H U - I||_F = {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("eigenvalue labels must be distinct")]
    DegenerateLabels,

    #[error("not a probability vector: {reason}")]
    NotAProbabilityVector { reason: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("depolarizing strength {0} outside [0, 1]")]
    InvalidEpsilon(f64),

    #[error("number of shots must be at least 1")]
    InvalidShots,

    #[error("Born probability {value:e} for outcome {outcome} is negative beyond round-off")]
    NegativeProbability { outcome: usize, value: f64 },

    #[error("rank-{rank} truncation boundary is degenerate: eigenvalues {kept:e} and {dropped:e}")]
    RankDegenerate {
        rank: usize,
        kept: f64,
        dropped: f64,
    },

    #[error("kept spectrum sums to {sum:e}, cannot normalize")]
    NonPositiveTruncation { sum: f64 },

    #[error("clipped spectrum sums to {sum:e}, no positive part to project onto")]
    AllNonPositive { sum: f64 },

    #[error("record list is empty")]
    EmptyRecords,

    #[error("invalid iteration config: {0}")]
    InvalidConfig(String),

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
