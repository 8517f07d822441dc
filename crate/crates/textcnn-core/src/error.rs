use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Two operands disagree on a dimension.
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    InputShorterThanWindow { len: usize, window: usize },
    Empty(&'static str),
    InvalidArgument(String),
    NonFinite(&'static str),
    LabelOutOfRange { label: usize, classes: usize },
    /// Malformed input text; `line` is 1-based.
    Parse { line: usize, message: String },
    UnknownClass { line: usize, tag: String },
    NotInVocabulary(String),
    MissingRunningStats,
    EmptyProbeGroup(String),
}

impl Error {
    pub(crate) fn shape(what: &'static str, expected: usize, found: usize) -> Self {
        Error::ShapeMismatch {
            what,
            expected,
            found,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch {
                what,
                expected,
                found,
            } => write!(f, "shape mismatch in {what}: expected {expected}, found {found}"),
            Error::InputShorterThanWindow { len, window } => {
                write!(f, "input shorter than window ({len} < {window})")
            }
            Error::Empty(what) => write!(f, "empty {what}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::LabelOutOfRange { label, classes } => {
                write!(f, "label {label} out of range for {classes} classes")
            }
            Error::Parse { line, message } => write!(f, "parse error on line {line}: {message}"),
            Error::UnknownClass { line, tag } => {
                write!(f, "unknown class tag {tag:?} on line {line}")
            }
            Error::NotInVocabulary(word) => write!(f, "{word:?} not in vocabulary"),
            Error::MissingRunningStats => {
                write!(f, "batch norm running statistics are not populated")
            }
            Error::EmptyProbeGroup(group) => write!(f, "empty probe group {group}"),
        }
    }
}

impl core::error::Error for Error {}
