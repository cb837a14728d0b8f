use thiserror::Error;

/// Errors produced anywhere in the ranking pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("label column '{0}' not found in header")]
    MissingColumn(String),

    #[error("cannot parse row {row}, column '{column}': {reason}")]
    ParseError {
        /// 1-based line number in the source file (the header is line 1).
        row: usize,
        column: String,
        reason: String,
    },

    #[error("dataset has a single class; at least two are required")]
    SingleClass,

    #[error("dataset has no samples")]
    EmptyDataset,

    #[error("value {value} at position {index} lies outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },

    #[error("count table has no positive entry")]
    DegenerateCounts,

    #[error("matrix is singular: pivot {pivot:e} at column {column}")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("enumeration budget exceeded: n = {n}, length = {length} (limits n <= 8, length <= 12)")]
    BudgetExceeded { n: usize, length: usize },

    #[error("feature selection is empty")]
    EmptySelection,

    #[error("dimension mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid absorbing chain: {0}")]
    InvalidChain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable variant name, used by the command line front end for
    /// `error:<Name>:` lines.
    pub fn name(&self) -> &'static str {
        match self {
            Error::MissingColumn(_) => "MissingColumn",
            Error::ParseError { .. } => "ParseError",
            Error::SingleClass => "SingleClass",
            Error::EmptyDataset => "EmptyDataset",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::DegenerateCounts => "DegenerateCounts",
            Error::SingularMatrix { .. } => "SingularMatrix",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::EmptySelection => "EmptySelection",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::InvalidChain(_) => "InvalidChain",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
