use std::fmt;

use thiserror::Error;

/// Syntax error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("ParseError (line {line}, col {col}): {message}")]
pub struct ParseError {
    pub message: String,
    pub line: u32,
    pub col: u32,
}

impl ParseError {
    pub fn new(message: impl Into<String>, line: u32, col: u32) -> Self {
        Self {
            message: message.into(),
            line,
            col,
        }
    }
}

/// Failure categories reported back to the caller (and, verbatim, to the model).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    ParseError,
    ForbiddenImport,
    UnknownImport,
    OperationLimitExceeded,
    RuntimeFault,
    SandboxViolation,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::ParseError => "ParseError",
            ErrorKind::ForbiddenImport => "ForbiddenImport",
            ErrorKind::UnknownImport => "UnknownImport",
            ErrorKind::OperationLimitExceeded => "OperationLimitExceeded",
            ErrorKind::RuntimeFault => "RuntimeFault",
            ErrorKind::SandboxViolation => "SandboxViolation",
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An execution error. `Display` renders a single line of the form
/// `Kind (line N): message`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ExecError {
    pub kind: ErrorKind,
    pub message: String,
    pub line: Option<u32>,
}

impl ExecError {
    pub fn new(kind: ErrorKind, message: impl Into<String>, line: Option<u32>) -> Self {
        let message: String = message.into();
        // Messages re-enter a prompt; keep them on one line.
        let message = message.replace(['\n', '\r'], " ");
        Self {
            kind,
            message,
            line,
        }
    }
}

impl fmt::Display for ExecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{} (line {}): {}", self.kind, line, self.message),
            None => write!(f, "{}: {}", self.kind, self.message),
        }
    }
}

impl From<ParseError> for ExecError {
    fn from(e: ParseError) -> Self {
        ExecError::new(
            ErrorKind::ParseError,
            format!("{} (col {})", e.message, e.col),
            Some(e.line),
        )
    }
}
