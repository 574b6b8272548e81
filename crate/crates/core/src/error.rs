use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("operator is not normalized: 2^-N tr(O^2) = {norm} (tolerance {tol})")]
    NotNormalized { norm: f64, tol: f64 },

    #[error("operator is not Hermitian: imaginary Pauli coefficient {residue:e} at index {index}")]
    NotHermitian { index: u64, residue: f64 },

    #[error("site {site} out of range 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("invalid Pauli label {0:?}")]
    InvalidPauli(String),

    #[error("at least {min} sites required, got {actual}")]
    TooFewSites { min: usize, actual: usize },

    #[error("exact dual state limited to {max} qubits, requested {requested}")]
    SizeGuard { max: usize, requested: usize },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("density matrix invalid: {0}")]
    InvalidDensity(String),

    #[error("probability vector invalid: {0}")]
    InvalidProbabilities(String),

    #[error("value {value} outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("time {t} is not an integer multiple of dt = {dt}")]
    MisalignedTime { t: f64, dt: f64 },

    #[error("gate {gate} invalid for register of width {width}")]
    InvalidGate { gate: String, width: usize },

    #[error("noise requires the density-matrix backend")]
    NoiseOnPureState,

    #[error("effective noise rate {0} exceeds 1")]
    NoiseRate(f64),

    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
