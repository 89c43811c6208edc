use std::fmt;

use finblock::Error;

#[derive(Debug)]
pub enum CliError {
    BadArgs(String),
    Numeric(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::BadArgs(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::BadArgs(m) => write!(f, "{m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::DimensionMismatch { .. }
            | Error::NotHermitian(_)
            | Error::NotPsd(_)
            | Error::NotNormalized(_)
            | Error::NotTracePreserving(_)
            | Error::NotRainsFeasible(_) => CliError::BadArgs(e.to_string()),
            Error::Solver { .. }
            | Error::NotConverged(_)
            | Error::Unattainable { .. }
            | Error::InfiniteDivergence(_) => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::BadArgs(e.to_string())
    }
}
