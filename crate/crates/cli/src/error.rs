use std::fmt;
use std::path::Path;

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_IO: u8 = 2;

/// Failure of a subcommand: a stable code, a message and the exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: String,
    pub message: String,
    pub exit: u8,
}

impl CliError {
    pub fn validation(code: &str, message: impl Into<String>) -> Self {
        Self { code: code.to_string(), message: message.into(), exit: EXIT_VALIDATION }
    }

    pub fn io(code: &str, message: impl Into<String>) -> Self {
        Self { code: code.to_string(), message: message.into(), exit: EXIT_IO }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.code, self.message)
    }
}

macro_rules! validation_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::validation(e.code(), e.to_string())
            }
        }
    )*};
}

validation_from!(
    oltground_core::IngestError,
    oltground_core::OltError,
    oltground_core::PlanError,
    oltground_core::GeoError,
    oltground_core::RenderError,
    oltground_agent::AgentError
);

impl From<oltground_eval::EvalError> for CliError {
    fn from(e: oltground_eval::EvalError) -> Self {
        let exit = if matches!(e, oltground_eval::EvalError::Io(_)) { EXIT_IO } else { EXIT_VALIDATION };
        Self { code: e.code().to_string(), message: e.to_string(), exit }
    }
}

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io("E_IO", format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io("E_IO", format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io("E_IO", format!("{}: {e}", path.display())))
}
