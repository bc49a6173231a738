use thiserror::Error;

/// Errors raised by state construction, model building and the kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("not Hermitian (max |M - M†| = {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("not a projector (max |P² - P| = {0:e})")]
    NotProjector(f64),

    #[error("measurement basis is not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("initial battery state is not passive: {0}")]
    NotPassive(String),

    #[error("degenerate battery mode frequencies: ω[{0}] = ω[{1}]")]
    DegenerateModes(usize, usize),

    #[error("populations are not normalized (sum {0})")]
    NotNormalized(f64),

    #[error("operation requires a multi-mode model")]
    NotMultiMode,
}

pub type Result<T> = std::result::Result<T, Error>;
