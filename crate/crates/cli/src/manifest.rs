//! Run manifests: everything needed to reproduce and verify a command's outputs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRef {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub input: Option<InputRef>,
    pub config: serde_json::Value,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    /// Output file name → SHA-256 of its bytes.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Manifest {
    pub fn new<C: Serialize>(command: &str, config: &C, seeds: Vec<u64>) -> Result<Self, CliError> {
        let config = serde_json::to_value(config).map_err(|e| CliError::config(e.to_string()))?;
        let config_sha256 = sha256_hex(config.to_string().as_bytes());
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            input: None,
            config,
            config_sha256,
            seeds,
            outputs: BTreeMap::new(),
        })
    }

    pub fn with_input(mut self, path: &Path, bytes: &[u8]) -> Self {
        self.input = Some(InputRef {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        });
        self
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        crate::config::load_json(path)
    }
}
