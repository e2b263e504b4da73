use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(FileDigest {
            path: path.display().to_string(),
            sha256: io::sha256_file(path)?,
        })
    }
}

/// Record of one batch command: what it read, how it was called and what it
/// wrote. Contains no timestamps, so reruns produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub args: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    pub fn new(command: &str, seed: Option<u64>, args: serde_json::Value) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            args,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(FileDigest::of(path)?);
        Ok(())
    }

    /// `<artifact>.manifest.json`, or `manifest.json` inside a directory.
    pub fn path_for(artifact: &Path) -> PathBuf {
        if artifact.is_dir() {
            return artifact.join("manifest.json");
        }
        let mut name = artifact.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        artifact.with_file_name(name)
    }

    pub fn write(&self, artifact: &Path) -> Result<PathBuf> {
        let path = Self::path_for(artifact);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        io::write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}
