use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is singular")]
    Singular,
    #[error("singular pivot at level {level}")]
    SingularPivot { level: usize },
    #[error("nonzero entry at even-order position ({i}, {j})")]
    PatternViolation { i: usize, j: usize },
    #[error("missing entry at odd-order position ({i}, {j})")]
    MissingEntry { i: usize, j: usize },
    #[error("need moments through index {needed}, have {available}")]
    InsufficientMoments { needed: usize, available: usize },
    #[error("condensed matrix is not Hankel at ({i}, {j})")]
    NotHankel { i: usize, j: usize },
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("truncation {0} is odd")]
    OddTruncation(usize),
    #[error("truncation mismatch: {0}")]
    TruncationMismatch(String),
    #[error("constant term p_{index}(0) is singular")]
    SingularConstantTerm { index: usize },
    #[error("division by z left a nonzero remainder for index {index}")]
    NonzeroRemainder { index: usize },
    #[error("structure violation: {0}")]
    StructureViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
