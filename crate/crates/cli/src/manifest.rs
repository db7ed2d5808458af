use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Written at the start of every command and rewritten on completion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config_paths: Vec<PathBuf>,
    /// SHA-256 of each input file, keyed by role.
    pub inputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub status: Option<String>,
}

impl RunManifest {
    pub fn start(command: &str, output_dir: &Path, seed: Option<u64>) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            args: std::env::args().collect(),
            config_paths: Vec::new(),
            inputs: BTreeMap::new(),
            seed,
            output_dir: output_dir.to_path_buf(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: now(),
            finished_at: None,
            status: None,
        }
    }

    pub fn write(&self) -> Result<()> {
        fs::create_dir_all(&self.output_dir)
            .with_context(|| format!("creating {}", self.output_dir.display()))?;
        let path = self.output_dir.join(MANIFEST_FILE);
        let body = serde_json::to_string_pretty(self)?;
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    }

    pub fn finish(&mut self, status: &str) -> Result<()> {
        self.finished_at = Some(now());
        self.status = Some(status.to_string());
        self.write()
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Run directory under `base` named by the hash of everything that
/// determines the run's results.
pub fn run_dir(base: &Path, command: &str, key_parts: &[&str]) -> PathBuf {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    for part in key_parts {
        h.update([0u8]);
        h.update(part.as_bytes());
    }
    let digest = hex::encode(h.finalize());
    base.join(format!("{command}-{}", &digest[..12]))
}
