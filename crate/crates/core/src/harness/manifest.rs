//! Run manifest: configuration echo, input digests, and per-stage output
//! digests. Contains nothing run-dependent beyond the digests themselves,
//! so identical configurations produce identical manifests.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StageRecord {
    pub name: String,
    /// Output file name (relative to the run directory) to content digest.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub format_version: u32,
    pub tool_version: String,
    pub config: BTreeMap<String, String>,
    pub config_sha256: String,
    /// Input name to content digest.
    pub inputs: BTreeMap<String, String>,
    pub stages: Vec<StageRecord>,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
}

impl Manifest {
    pub fn new(config: BTreeMap<String, String>) -> Self {
        let canonical = serde_json::to_string(&config).expect("BTreeMap serializes");
        Self {
            format_version: 1,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: sha256_hex(canonical.as_bytes()),
            config,
            inputs: BTreeMap::new(),
            stages: Vec::new(),
            failed_stage: None,
            error: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}
