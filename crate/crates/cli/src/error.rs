use std::path::PathBuf;

use thiserror::Error;

/// Everything a subcommand can fail with. The variant fixes the exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, msg: String },
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("blow-up: {0}")]
    BlowUp(String),
    #[error("snapshot format error: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error(transparent)]
    Core(ddc_core::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn config(line: Option<usize>, msg: impl Into<String>) -> Self {
        CliError::Config { line, msg: msg.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 0 success, 2 configuration, 3 constraint at startup, 4 blow-up,
    /// 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Constraint(_) => 3,
            CliError::BlowUp(_) => 4,
            _ => 1,
        }
    }
}

impl From<ddc_core::Error> for CliError {
    fn from(e: ddc_core::Error) -> Self {
        use ddc_core::Error as E;
        match e {
            E::Constraint(m) => CliError::Constraint(m),
            E::BlowUp { step, reason } => CliError::BlowUp(format!("step {step}: {reason}")),
            E::Config(m) | E::Domain(m) => CliError::config(None, m),
            other => CliError::Core(other),
        }
    }
}
