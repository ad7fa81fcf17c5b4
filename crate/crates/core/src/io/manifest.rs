//! Run manifests: every produced file with its SHA-256 hash.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentKind;
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Passed,
    ChecksFailed,
    Failed,
}

impl RunStatus {
    /// 0 when every check passed, 1 when a check failed, 2 on errors.
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Passed => 0,
            RunStatus::ChecksFailed => 1,
            RunStatus::Failed => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: ExperimentKind,
    pub status: RunStatus,
    pub checks: BTreeMap<String, bool>,
    /// Stage and message of the failure that stopped the run.
    pub failure: Option<String>,
    pub threads: usize,
    pub seed: Option<u64>,
    pub files: Vec<ManifestEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(dir: &Path, relative: &str) -> Result<ManifestEntry> {
    let path = dir.join(relative);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(ManifestEntry {
        path: relative.to_string(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Files whose current content no longer matches the manifest.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let manifest = read_manifest(dir)?;
    let mut bad = Vec::new();
    for entry in &manifest.files {
        match hash_file(dir, &entry.path) {
            Ok(now) if now == *entry => {}
            _ => bad.push(entry.path.clone()),
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn exit_codes() {
        assert_eq!(RunStatus::Passed.exit_code(), 0);
        assert_eq!(RunStatus::ChecksFailed.exit_code(), 1);
        assert_eq!(RunStatus::Failed.exit_code(), 2);
    }
}
