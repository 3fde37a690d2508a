//! Output directory handling: provenance headers and the run manifest.
//!
//! Files are buffered in memory during a run and written together at the
//! end, so a failed run leaves only `error.json` behind.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "EKM_OUT_DIR";

pub fn resolve_out_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_DIR_ENV) {
        return PathBuf::from(p);
    }
    config
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("ekm-out"))
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub version: &'static str,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub details: BTreeMap<String, Value>,
}

pub struct RunOutput {
    dir: PathBuf,
    header: String,
    files: Vec<(String, Vec<u8>)>,
    pub manifest: Manifest,
}

impl RunOutput {
    pub fn new(dir: PathBuf, command: &str, config_sha256: &str, seed: u64) -> Self {
        Self {
            dir,
            header: format!("# config_sha256={config_sha256} seed={seed}\n"),
            files: Vec::new(),
            manifest: Manifest {
                command: command.into(),
                config_sha256: config_sha256.into(),
                seed,
                version: env!("CARGO_PKG_VERSION"),
                outputs: Vec::new(),
                warnings: Vec::new(),
                details: BTreeMap::new(),
            },
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Provenance comment written at the top of every CSV.
    pub fn header(&self) -> &str {
        &self.header
    }

    /// Queues a CSV; `body` writes everything after the provenance line.
    pub fn csv(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let mut buf = self.header.clone().into_bytes();
        body(&mut buf)?;
        self.files.push((name.to_string(), buf));
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        self.manifest.warnings.push(w.into());
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.manifest.details.insert(key.to_string(), v);
    }

    /// Writes every queued file and `manifest.json`.
    pub fn finish(self) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.dir)?;
        for (name, bytes) in &self.files {
            std::fs::write(self.dir.join(name), bytes)?;
        }
        let json = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        std::fs::write(self.dir.join("manifest.json"), json + "\n")?;
        let _ = std::fs::remove_file(self.dir.join("error.json"));
        Ok(self.dir)
    }
}

pub fn write_error(dir: &Path, err: &CliError) {
    if std::fs::create_dir_all(dir).is_ok() {
        if let Ok(json) = serde_json::to_string_pretty(&err.report()) {
            let _ = std::fs::write(dir.join("error.json"), json + "\n");
        }
    }
}
