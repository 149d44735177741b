//! Error channel of the command-line tool.
//!
//! Everything that can go wrong is folded into two categories that map to
//! exit codes: bad inputs (2) and numerical failure inside a computation (3).
//! Either way a single machine-parsable JSON record goes to standard error.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, malformed files, schema mismatches.  Exit code 2.
    Validation(String),
    /// A computation failed on valid-looking inputs.  Exit code 3.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => m,
        }
    }

    /// The one-line stderr record.
    pub fn record(&self) -> String {
        format!(
            "{{\"error\":{},\"message\":{}}}",
            serde_json::to_string(self.kind()).expect("kind serializes"),
            serde_json::to_string(self.message()).expect("message serializes"),
        )
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind(), self.message())
    }
}

impl From<circst::Error> for CliError {
    fn from(e: circst::Error) -> Self {
        match e {
            circst::Error::NotPositiveDefinite { .. }
            | circst::Error::NonFinite { .. }
            | circst::Error::UndefinedDirection => CliError::Numerical(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("io: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Validation(format!("csv: {e}"))
    }
}

pub fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

pub type CliResult<T> = Result<T, CliError>;
