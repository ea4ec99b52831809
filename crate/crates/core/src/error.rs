use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric value fell outside the range its quantity admits.
    #[error("{field} = {value} is outside {expected}")]
    Domain {
        field: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    /// A scenario could not be executed at a particular tick.
    #[error("tick {tick}: {message}")]
    Scenario { tick: u64, message: String },

    #[error("trace error: {0}")]
    Trace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(field: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            field,
            value,
            expected,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Semantic,
}

/// A scenario-file error located at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl ParseError {
    pub fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            kind: ParseErrorKind::Syntax,
            message: message.into(),
        }
    }

    pub fn semantic(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            kind: ParseErrorKind::Semantic,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::Semantic => "invalid value",
        };
        write!(
            f,
            "line {}, column {}: {}: {}",
            self.line, self.column, kind, self.message
        )
    }
}
