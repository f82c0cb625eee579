//! Run manifests: what ran, with which seeds, and digests of everything written.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{AutoEpsilonRecord, ExperimentConfig};
use crate::error::{HarnessError, HarnessResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";

/// How per-path seeds follow from the root seed.
pub const SEED_RULE: &str = "path i uses splitmix64 finalizer of (root + (i + 1) * 0x9E3779B97F4A7C15), driving ChaCha8";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

impl OutputRecord {
    pub fn of(name: &str, bytes: &[u8]) -> Self {
        Self {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub experiment: String,
    /// The resolved config, every default materialized.
    pub config: ExperimentConfig,
    pub auto_epsilon: Option<AutoEpsilonRecord>,
    pub seed_rule: String,
    pub root_seed: u64,
    pub path_seeds: Vec<u64>,
    /// Indices of paths aborted by an explosion.
    pub censored: Vec<usize>,
    pub diagnostics: Vec<String>,
    pub workers: usize,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputRecord>,
    pub passed: Option<bool>,
}

impl RunManifest {
    pub fn load(path: &Path) -> HarnessResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("manifest {}: {e}", path.display())))
    }

    pub fn output(&self, name: &str) -> Option<&OutputRecord> {
        self.outputs.iter().find(|o| o.name == name)
    }

    /// Recomputes the digest of every listed output under `dir`; returns the
    /// names that are missing or differ.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.outputs
            .iter()
            .filter(|o| match std::fs::read(dir.join(&o.name)) {
                Ok(bytes) => OutputRecord::of(&o.name, &bytes) != **o,
                Err(_) => true,
            })
            .map(|o| o.name.clone())
            .collect()
    }

    /// CSV outputs whose digests differ between two manifests, including files
    /// present in only one of them.
    pub fn csv_mismatches(&self, other: &RunManifest) -> Vec<String> {
        let mut names: Vec<&str> = self
            .outputs
            .iter()
            .chain(&other.outputs)
            .map(|o| o.name.as_str())
            .filter(|n| n.ends_with(".csv"))
            .collect();
        names.sort_unstable();
        names.dedup();
        names
            .into_iter()
            .filter(|n| self.output(n).map(|o| &o.sha256) != other.output(n).map(|o| &o.sha256))
            .map(String::from)
            .collect()
    }
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
}
