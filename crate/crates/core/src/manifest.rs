use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Everything needed to rerun a command and get the same output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    /// SHA-256 of each input file, keyed by the path as given.
    pub input_digests: BTreeMap<String, String>,
    pub tool_version: String,
    pub seeds: Vec<u64>,
    /// RFC 3339, UTC. The only field that differs between identical runs.
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, parameters: serde_json::Value) -> Self {
        Self {
            command: command.to_owned(),
            parameters,
            input_digests: BTreeMap::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            seeds: Vec::new(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn with_input(mut self, path: &Path) -> std::io::Result<Self> {
        let bytes = fs::read(path)?;
        self.input_digests
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seeds.push(seed);
        self
    }

    /// Writes `<output>.manifest.json` next to `output`.
    pub fn write_beside(&self, output: &Path) -> std::io::Result<()> {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(name, json + "\n")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
