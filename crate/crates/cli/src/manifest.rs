//! Run manifest: config hash, tool version, per-output checksums, and
//! wall-clock duration. Re-running an identical config reproduces the
//! output checksums bit for bit.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_sha256: String,
    pub outputs: Vec<OutputEntry>,
    pub duration_seconds: f64,
    pub notes: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Collects outputs as they are written and finalizes the manifest.
pub struct ManifestBuilder {
    out_dir: PathBuf,
    config_sha256: String,
    outputs: Vec<OutputEntry>,
    notes: Vec<String>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(out_dir: &Path, config_bytes: &[u8]) -> Result<Self, CliError> {
        fs::create_dir_all(out_dir).map_err(|e| {
            CliError::config(format!(
                "cannot create output dir {}: {e}",
                out_dir.display()
            ))
        })?;
        Ok(ManifestBuilder {
            out_dir: out_dir.to_path_buf(),
            config_sha256: sha256_hex(config_bytes),
            outputs: Vec::new(),
            notes: Vec::new(),
            started: Instant::now(),
        })
    }

    /// Writes a named output file and records its checksum.
    pub fn write_output(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(OutputEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Writes manifest.json (not itself checksummed: it carries the wall
    /// clock) and returns the manifest.
    pub fn finalize(self) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: self.config_sha256,
            outputs: self.outputs,
            duration_seconds: self.started.elapsed().as_secs_f64(),
            notes: self.notes,
        };
        let path = self.out_dir.join("manifest.json");
        let json =
            serde_json::to_string_pretty(&manifest).map_err(|e| CliError::config(e.to_string()))?;
        fs::write(&path, json)
            .map_err(|e| CliError::config(format!("cannot write manifest: {e}")))?;
        Ok(manifest)
    }
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest, CliError> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path)
        .map_err(|_| CliError::missing_input(format!("no manifest at {}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("bad manifest {}: {e}", path.display())))
}

/// Re-hashes the outputs listed in a manifest; returns the paths whose
/// checksums no longer match (missing files count as mismatches).
pub fn verify_checksums(dir: &Path, manifest: &RunManifest) -> Vec<String> {
    let mut mismatches = Vec::new();
    for entry in &manifest.outputs {
        let path = dir.join(&entry.path);
        match fs::read(&path) {
            Ok(bytes) if sha256_hex(&bytes) == entry.sha256 => {}
            _ => mismatches.push(entry.path.clone()),
        }
    }
    mismatches
}
