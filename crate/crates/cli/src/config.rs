//! Optional JSON run config. Command-line flags win over environment
//! variables, which win over this file.

use std::path::{Path, PathBuf};

use oltground_agent::ToolConfig;
use serde::Deserialize;

use crate::error::{read, CliError};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub backend_url: Option<String>,
    pub model: Option<String>,
    pub timeout_s: Option<f64>,
    pub fallback: Option<String>,
    pub workers: Option<usize>,
    pub aliases: Option<PathBuf>,
    pub tools: Option<ToolConfig>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        serde_json::from_slice(&read(path)?)
            .map_err(|e| CliError::validation("E_CONFIG", format!("{}: {e}", path.display())))
    }
}
