use thiserror::Error;

/// Errors raised by the algebra, propagators and circuit emulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("requested {requested} sites exceeds the configured cap of {cap}")]
    ResourceLimit { requested: usize, cap: usize },

    #[error("number of sites must be positive")]
    NoSites,

    #[error("pauli strings act on different numbers of sites ({left} vs {right})")]
    SiteMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("operator is not Hermitian (residual {residual:e})")]
    NonHermitian { residual: f64 },

    #[error("structure constant c[{k},{i},{j}] has imaginary part {imag:e}")]
    NonRealStructureConstant {
        k: usize,
        i: usize,
        j: usize,
        imag: f64,
    },

    #[error("non-finite value in coefficient vector at index {index}")]
    NonFinite { index: usize },

    #[error(
        "V(alpha) is singular at t = {t} (condition estimate {condition:e}); last valid time {last_valid}"
    )]
    Singular {
        t: f64,
        condition: f64,
        last_valid: f64,
    },

    #[error("input vector has zero norm")]
    ZeroNorm,

    #[error("vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("malformed probability table: {0}")]
    MalformedProbabilities(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unknown name `{0}`")]
    UnknownName(String),
}

pub type Result<T> = std::result::Result<T, Error>;
