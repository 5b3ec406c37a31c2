use std::path::{Path, PathBuf};

use thiserror::Error;
use weingarten::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}{}: {msg}", if key.is_empty() { String::new() } else { format!(" at `{key}`") }, line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config { key: String, line: Option<usize>, msg: String },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{0}")]
    Data(String),

    #[error("{failed} self-test suite(s) failed")]
    SelfTest { failed: usize },
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const VALIDATION: i32 = 3;
    pub const CONE: i32 = 4;
    pub const STALLED: i32 = 5;
    pub const IO: i32 = 6;
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Data(_) => exit::CONFIG,
            CliError::Io { .. } => exit::IO,
            CliError::SelfTest { .. } => exit::OTHER,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

pub fn core_exit_code(e: &CoreError) -> i32 {
    match e {
        CoreError::Parse { .. }
        | CoreError::UnknownIdentifier { .. }
        | CoreError::Eval { .. }
        | CoreError::InvalidParams(_)
        | CoreError::BadAnnulus { .. }
        | CoreError::TooCoarse(_)
        | CoreError::SizeMismatch { .. } => exit::CONFIG,
        CoreError::ValidationFailed(_) => exit::VALIDATION,
        CoreError::ConeViolation { .. } => exit::CONE,
        CoreError::ContinuationStalled(_) => exit::STALLED,
        _ => exit::OTHER,
    }
}
