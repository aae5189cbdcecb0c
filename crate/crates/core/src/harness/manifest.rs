use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::table::{Format, Table};
use crate::error::Result;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// File name relative to the output directory.
    pub path: String,
    pub sha256: String,
}

/// One asserted invariant of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub version: String,
    pub replica_seeds: Vec<u64>,
    pub wall_time_secs: f64,
    pub files: Vec<FileDigest>,
    pub checks: Vec<CheckResult>,
}

impl RunManifest {
    pub const FILE_NAME: &'static str = "manifest.json";

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join(Self::FILE_NAME), self.to_json())?;
        Ok(())
    }
}

/// Renders each table into `dir` and returns the digests in table order.
pub fn write_tables(dir: &Path, tables: &[Table], format: Format) -> Result<Vec<FileDigest>> {
    std::fs::create_dir_all(dir)?;
    tables
        .iter()
        .map(|t| {
            let name = t.file_name(format);
            let body = t.render(format);
            std::fs::write(dir.join(&name), &body)?;
            Ok(FileDigest {
                path: name,
                sha256: sha256_hex(body.as_bytes()),
            })
        })
        .collect()
}
