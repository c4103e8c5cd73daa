//! Provenance blocks: input digests, config echo, toolkit version.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Traceability record attached to generated reports.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub toolkit_version: &'static str,
    /// Input path -> SHA-256 of the file bytes.
    pub inputs: BTreeMap<String, String>,
    /// Echo of the effective command configuration.
    pub config: serde_json::Value,
}

impl Provenance {
    pub fn new(inputs: &[&Path], config: serde_json::Value) -> Result<Self, CliError> {
        let mut digests = BTreeMap::new();
        for path in inputs {
            digests.insert(path.display().to_string(), sha256_hex(path)?);
        }
        Ok(Self {
            toolkit_version: env!("CARGO_PKG_VERSION"),
            inputs: digests,
            config,
        })
    }
}

pub fn sha256_hex(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: PathBuf::from(path),
        source,
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
