use thiserror::Error;

/// Errors produced by the analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("letter {letter} out of range for physical dimension {d}")]
    InvalidLetter { letter: usize, d: usize },

    #[error("word must be nonempty")]
    EmptyWord,

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("dense construction needs {required} components, cap is {cap} (raise TNPUR_CAP or use a smaller length)")]
    CapExceeded { required: u128, cap: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("scalar mode error: {0}")]
    Mode(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
