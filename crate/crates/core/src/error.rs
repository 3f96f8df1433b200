use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample at index ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("map `{map}` undefined at |q| = {q:e}, k = {k:e}")]
    Domain { map: String, q: f64, k: f64 },

    #[error("map `{map}` has vanishing dkappa/dk at |q| = {q:e}, k = {k:e}")]
    SingularWeight { map: String, q: f64, k: f64 },

    #[error("carrier mismatch: {0:e} vs {1:e}")]
    CarrierMismatch(f64, f64),

    #[error("dispersion maps differ: `{0}` vs `{1}`")]
    MapMismatch(String, String),

    #[error("map `{0}` does not produce positive-frequency solutions")]
    NotExactSolution(String),

    #[error("stations are not equally spaced: {0}")]
    UnequalSpacing(String),

    #[error("carrier {0:e} is not on the comb")]
    NotOnComb(f64),

    #[error("comb mismatch: {0}")]
    CombMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
