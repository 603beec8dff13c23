use std::fmt;

use specgal_core::Error;

/// Outcome classes with their process exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Usage, configuration or runtime error (exit 1).
    Config(String),
    /// A checked estimate did not hold (exit 2).
    Check(String),
    /// An optimizer did not converge (exit 3).
    NonConvergence(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Check(_) => 2,
            Failure::NonConvergence(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "error: {m}"),
            Failure::Check(m) => write!(f, "check failed: {m}"),
            Failure::NonConvergence(m) => write!(f, "not converged: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence(m) => Failure::NonConvergence(m),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}
