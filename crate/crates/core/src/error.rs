use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{field}` out of range: {reason}")]
    OutOfRange { field: &'static str, reason: String },

    #[error("closed form only defined for 2 bases, got {0}")]
    UnsupportedBasisCount(u32),

    #[error("degenerate denominator: {0} is zero")]
    DegenerateDenominator(&'static str),

    #[error("pairing requires an even stream length, got {0}")]
    OddLength(u64),

    #[error("letter {letter} outside alphabet of size {dimension}")]
    LetterOutOfRange { letter: u32, dimension: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid shuffle announcement: {0}")]
    InvalidAnnouncement(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("malformed input at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn out_of_range(field: &'static str, reason: impl Into<String>) -> Self {
        Error::OutOfRange {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
