//! Run manifests: everything needed to reproduce a command invocation.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::{CliError, CliResult};

/// Written next to every set of output files. The resolved config embeds
/// all seeds and options, so replaying the manifest's command with its
/// config reproduces the outputs exactly; timestamps and the inventory
/// are provenance, not inputs.
#[derive(Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    /// Fully resolved configuration after defaults and overrides.
    pub config: serde_json::Value,
    /// Epoch seconds at start and finish.
    pub started_at: u64,
    pub finished_at: u64,
    /// File names written by the run, relative to the manifest.
    pub outputs: Vec<String>,
}

pub fn epoch_seconds() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, started_at: u64) -> Self {
        RunManifest {
            schema_version: 1,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            started_at,
            finished_at: epoch_seconds(),
            outputs: Vec::new(),
        }
    }

    pub fn write(mut self, dir: &Path, outputs: &[&str]) -> CliResult<()> {
        self.outputs = outputs.iter().map(|s| s.to_string()).collect();
        self.finished_at = epoch_seconds();
        let text = serde_json::to_string_pretty(&self)
            .map_err(|e| CliError::Data(format!("cannot serialize manifest: {e}")))?;
        let path = dir.join("manifest.json");
        std::fs::write(&path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }
}
