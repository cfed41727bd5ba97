use std::fmt;
use std::process::ExitCode;

/// Failures of a CLI run, each mapped to a distinct exit status.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or out-of-range configuration.
    Config(String),
    /// A numerical contract of the pipeline did not hold.
    Contract(String),
    Io(String),
}

impl CliError {
    pub fn status(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Contract(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.status())
    }
}

/// Library validation failures on config-derived values are config errors.
impl From<hubbard_ts::Error> for CliError {
    fn from(e: hubbard_ts::Error) -> Self {
        match e {
            hubbard_ts::Error::InvalidInput(m) => CliError::Config(m),
            other => CliError::Contract(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Contract(m) => write!(f, "contract violation: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}
