use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path, label: impl Into<String>) -> Result<Self> {
        let bytes =
            std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        Ok(Self {
            path: label.into(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

/// Record of one run. Two runs whose manifests agree on everything except
/// the timestamps wrote byte-identical result files.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub master_seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(command: &'static str, master_seed: u64, config: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            master_seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_unix: unix_now(),
            finished_unix: 0,
        }
    }

    /// Hashes every listed output in `dir`, stamps the finish time and
    /// writes `manifest.json`.
    pub fn finish(mut self, dir: &Path, outputs: &[String]) -> Result<()> {
        for name in outputs {
            self.outputs
                .push(FileDigest::of(&dir.join(name), name.clone())?);
        }
        self.finished_unix = unix_now();
        let mut text = serde_json::to_string_pretty(&self)?;
        text.push('\n');
        std::fs::write(dir.join("manifest.json"), text).context("cannot write manifest.json")
    }
}
