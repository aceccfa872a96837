//! Run manifests: a JSON record of exactly what a command read, which knobs
//! it ran with, and the digests of everything it produced. Two runs with the
//! same manifest fields are expected to produce byte-identical outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    /// input path → sha256 of its content
    pub inputs: BTreeMap<String, String>,
    /// flattened parameter values, stringified
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
    pub version: String,
    /// "stdout" and any written file → sha256 of the bytes
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            parameters: BTreeMap::new(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path, content: &str) {
        self.inputs
            .insert(path.display().to_string(), sha256_hex(content.as_bytes()));
    }

    pub fn record_param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.to_string(), value.to_string());
    }

    pub fn record_output(&mut self, name: &str, content: &str) {
        self.outputs
            .insert(name.to_string(), sha256_hex(content.as_bytes()));
    }

    pub fn record_output_digest(&mut self, name: &str, digest: &str) {
        self.outputs.insert(name.to_string(), digest.to_string());
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, json + "\n")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
