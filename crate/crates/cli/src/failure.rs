//! Command failures and their process exit codes.

use std::fmt;
use std::path::Path;

use halfline_ist::Error;
use serde::Serialize;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CLASS_VIOLATION: u8 = 2;
pub const EXIT_SINGULAR: u8 = 3;
pub const EXIT_ORACLE: u8 = 4;

#[derive(Debug)]
pub enum Failure {
    /// Error raised by the numerical library.
    Core(Error),
    /// File system trouble.
    Io(String),
    /// Scattering data outside the admissible class (validation failed).
    Class(String),
    /// One or more verification oracles failed.
    Oracle(String),
}

impl Failure {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::SingularSystem { .. }) => EXIT_SINGULAR,
            Failure::Core(e) if e.is_class_violation() => EXIT_CLASS_VIOLATION,
            Failure::Class(_) => EXIT_CLASS_VIOLATION,
            Failure::Oracle(_) => EXIT_ORACLE,
            Failure::Core(_) | Failure::Io(_) => EXIT_FAILURE,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Core(Error::SingularSystem { .. }) => "singular_system",
            Failure::Core(Error::InvalidConfig(_)) => "invalid_config",
            Failure::Core(e) if e.is_class_violation() => "class_violation",
            Failure::Core(_) => "numerical_failure",
            Failure::Io(_) => "io",
            Failure::Class(_) => "class_violation",
            Failure::Oracle(_) => "failed_oracle",
        }
    }

    /// Diagnostic document written next to the outputs on failure.
    pub fn diagnostic_json(&self) -> String {
        #[derive(Serialize)]
        struct Diag<'a> {
            kind: &'a str,
            exit_code: u8,
            message: String,
        }
        serde_json::to_string_pretty(&Diag {
            kind: self.kind(),
            exit_code: self.exit_code(),
            message: self.to_string(),
        })
        .expect("diagnostic serializes")
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
            Failure::Class(m) => write!(f, "scattering data outside the admissible class: {m}"),
            Failure::Oracle(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}
