use thiserror::Error;

/// Errors produced while building, evaluating or decoding structures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix rows are linearly dependent")]
    SingularMatrix,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("hash range must be at least 1")]
    ZeroRange,
    #[error("cannot draw {k} distinct indices from a range of {m}")]
    KTooLarge { k: usize, m: usize },
    #[error("conditioned binomial has no mass in [{lo}, {hi}]")]
    EmptySupport { lo: usize, hi: usize },
    #[error("duplicate key at input position {index}")]
    DuplicateKeys { index: usize },
    #[error("no successful construction after {attempts} attempts")]
    RandomnessExhausted { attempts: u32 },
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("pivot set does not match the structure")]
    PivotMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("value {value} does not fit in {bits} bits")]
    ValueTooWide { value: u64, bits: u32 },
    #[error("argument outside the function's domain: {0}")]
    DomainError(String),
    #[error("bisection did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("checksum mismatch")]
    BadCrc,
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),
    #[error("malformed container: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
