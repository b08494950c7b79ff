use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("inverse of zero is undefined")]
    ZeroInverse,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no invertible matrix found after {0} attempts")]
    NoInvertibleMatrix(usize),

    #[error("affine map matrix is singular")]
    SingularAffine,

    #[error("central map contains an oil x oil term in polynomial {0}")]
    OilOilTerm(usize),

    #[error("central map inversion failed after {0} vinegar samples")]
    InversionFailure(usize),

    #[error("key extraction failed after {0} derivation counters")]
    ExtractionFailure(u32),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("field modulus mismatch: data is over F_{found}, expected F_{expected}")]
    ModulusMismatch { expected: u32, found: u32 },

    #[error("malformed encoding: {0}")]
    Malformed(String),

    #[error("duplicate identity {0:?}")]
    DuplicateIdentity(String),

    #[error("empty batch")]
    EmptyBatch,
}

pub type Result<T> = std::result::Result<T, Error>;
