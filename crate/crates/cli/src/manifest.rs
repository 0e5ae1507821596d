use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use bcr_core::tolerance::ToleranceConfig;
use serde::{Deserialize, Serialize};

use crate::{CliError, Command};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to rerun a command. Input paths are stored absolute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    pub invocation: Command,
    pub config_path: Option<PathBuf>,
    pub instance_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub tolerances: ToleranceConfig,
    pub output: PathBuf,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

pub fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis())
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text =
            serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}
