use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use soga_core::graph::DatasetManifest;
use soga_core::{Error, Result};

pub const MANIFEST_FILE: &str = "run.json";

/// Written next to every run's outputs. `config` is the fully resolved
/// configuration, so passing this file back as `--config` replays the run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub input_hashes: BTreeMap<String, String>,
    pub tool_version: String,
    pub timings: BTreeMap<String, f64>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new<C: Serialize>(subcommand: &str, config: &C, seeds: Vec<u64>) -> Result<Self> {
        Ok(RunManifest {
            subcommand: subcommand.to_string(),
            config: serde_json::to_value(config)?,
            seeds,
            input_hashes: BTreeMap::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timings: BTreeMap::new(),
            outputs: Vec::new(),
        })
    }

    pub fn hash_file(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        self.input_hashes
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    /// Hashes a dataset manifest and the files it references. The label file
    /// is only touched when `with_labels` is set.
    pub fn hash_dataset(&mut self, manifest: &Path, with_labels: bool) -> Result<()> {
        self.hash_file(manifest)?;
        let m = DatasetManifest::read(manifest)?;
        let base = manifest.parent().unwrap_or_else(|| Path::new("."));
        let mut files = vec![m.edges, m.features];
        if with_labels {
            files.extend(m.labels);
        }
        for f in files {
            let p = if f.is_absolute() { f } else { base.join(f) };
            self.hash_file(&p)?;
        }
        Ok(())
    }

    pub fn write(&mut self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        self.outputs.push(path.clone());
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let body = serde_json::to_string_pretty(self)?;
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Reads a JSON config. A run manifest is accepted too, in which case its
/// `config` field is used.
pub fn read_config<C: serde::de::DeserializeOwned>(path: &Path) -> Result<C> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    if value.get("subcommand").is_some() {
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
    }
    serde_json::from_value(value).map_err(|e| Error::config(format!("{}: {e}", path.display())))
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
