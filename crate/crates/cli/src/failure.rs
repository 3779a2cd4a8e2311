use std::fmt;
use std::process::ExitCode;

/// Why a command did not pass; each kind maps to one exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Bad arguments or unreadable input: exit 2.
    Usage(String),
    /// A verification check failed: exit 1.
    Check(String),
    /// Integration or refinement broke down, or a check could not decide
    /// because an orbit is degenerate: exit 3.
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Check(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "error: {m}"),
            Failure::Check(m) => write!(f, "check failed: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}
