//! Append-only JSONL log of runs: resolved configuration hash, input
//! fingerprints and ledger totals.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;
use crate::llm_backend::CostLedger;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFingerprint {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub timestamp: u64,
    pub command: String,
    /// SHA-256 of the canonical JSON form of `config`.
    pub config_hash: String,
    pub config: serde_json::Value,
    pub inputs: Vec<InputFingerprint>,
    pub outputs: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ledger: Option<CostLedger>,
}

pub fn fingerprint_file(path: &Path) -> Result<InputFingerprint, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    Ok(InputFingerprint {
        path: path.to_path_buf(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        let config_hash = hex::encode(Sha256::digest(config.to_string().as_bytes()));
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            command: command.to_string(),
            config_hash,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            ledger: None,
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs.push(fingerprint_file(path)?);
        Ok(())
    }

    pub fn append_to(&self, path: &Path) -> Result<(), CliError> {
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| CliError::Io(format!("cannot open manifest {}: {e}", path.display())))?;
        let mut line = serde_json::to_string(self).expect("manifest serializes");
        line.push('\n');
        file.write_all(line.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write manifest {}: {e}", path.display())))
    }
}
