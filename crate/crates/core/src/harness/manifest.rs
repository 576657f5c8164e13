//! Run manifests: per-stage status and checksums of every produced file.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    /// A numerical error stopped the stage.
    Failed,
    /// The stage rejected its configuration or input files.
    ConfigError,
    /// The stage computed its outputs but a property check did not hold.
    CheckFailed,
    /// An earlier stage failed.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub status: StageStatus,
    pub diagnostics: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    /// SHA-256 of the canonical JSON of the config without `out`.
    pub config_hash: String,
    pub tool_version: String,
    pub seed: u64,
    pub wall_time_s: f64,
    pub stages: Vec<StageRecord>,
    /// Key results of the stages.
    pub summary: serde_json::Map<String, serde_json::Value>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    /// Worst stage outcome as a process exit code: numerical failure 3,
    /// failed check 4, configuration error 2.
    pub fn exit_code(&self) -> i32 {
        let has = |st: StageStatus| self.stages.iter().any(|s| s.status == st);
        if has(StageStatus::Failed) {
            3
        } else if has(StageStatus::CheckFailed) {
            4
        } else if has(StageStatus::ConfigError) {
            2
        } else {
            0
        }
    }

    pub fn checksum_of(&self, path: &str) -> Option<&str> {
        self.files.iter().find(|f| f.path == path).map(|f| f.sha256.as_str())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, HarnessError> {
    let mut file = fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let k = file.read(&mut buf).map_err(|e| HarnessError::io(path, e))?;
        if k == 0 {
            break;
        }
        hasher.update(&buf[..k]);
    }
    Ok(hex::encode(hasher.finalize()))
}
