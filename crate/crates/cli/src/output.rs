//! Deterministic output emission: CSV/JSON files plus a manifest with
//! checksums. Reruns with the same config produce byte-identical trees.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

/// Fixed 17-significant-digit float formatting for stable diffs.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct OutputDir {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(dir: &PathBuf) -> Result<OutputDir, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(OutputDir {
            dir: dir.clone(),
            files: BTreeMap::new(),
        })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        self.files.insert(name.to_string(), hex_digest(hasher));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io {
            path: name.to_string(),
            message: e.to_string(),
        })?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn write_csv(&mut self, name: &str, header: &str, rows: &[String]) -> Result<(), CliError> {
        let mut text = String::with_capacity(rows.len() * 64 + header.len() + 1);
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        self.write_bytes(name, text.as_bytes())
    }

    /// Write the manifest (config echo, version, file checksums) and finish.
    pub fn finish(mut self, config: &RunConfig) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            config: &'a RunConfig,
            version: &'static str,
            files: &'a BTreeMap<String, String>,
        }
        let manifest = Manifest {
            config,
            version: env!("CARGO_PKG_VERSION"),
            files: &self.files.clone(),
        };
        self.write_json("manifest.json", &manifest)
    }
}

fn hex_digest(hasher: Sha256) -> String {
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}
