use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix dimensions {left_rows}x{left_cols} and {right_rows}x{right_cols} are incompatible")]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("data length {found} does not match {rows}x{cols}")]
    DataLength {
        rows: usize,
        cols: usize,
        found: usize,
    },
    #[error("non-finite entry rejected")]
    NonFinite,
    #[error("matrix has no entries")]
    EmptyMatrix,
    #[error("rank {k} outside valid range 1..={max}")]
    RankOutOfRange { k: usize, max: usize },
    #[error("index sequence is not a permutation")]
    InvalidPermutation,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("triangular panel is numerically singular at column {column}")]
    SingularPanel { column: usize },
    #[error("triangular matrix is singular at diagonal {index}")]
    SingularTriangle { index: usize },
    #[error("iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("oracle limited to min dimension {max}, got {dim}")]
    OracleTooLarge { dim: usize, max: usize },
    #[error("entry below the first subdiagonal at ({row}, {col}); not a valid spike structure")]
    SpikeStructure { row: usize, col: usize },
}
