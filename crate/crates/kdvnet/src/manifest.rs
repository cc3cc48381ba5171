//! Per-run manifests: what ran, with which inputs, producing which files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, IoContext, Result};

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Artifact {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl Artifact {
    pub fn of(path: &Path) -> Result<Self> {
        let data = fs::read(path).at(path)?;
        Ok(Self {
            path: path.display().to_string(),
            bytes: data.len() as u64,
            sha256: sha256_hex(&data),
        })
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub args: Vec<String>,
    pub threads: usize,
    pub started_unix: u64,
    pub timings: Vec<Timing>,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
    /// Command-specific settings and results.
    pub details: toml::Table,
    #[serde(skip)]
    clock: Option<Instant>,
}

impl RunManifest {
    pub fn start(command: &str, threads: usize) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            args: std::env::args().collect(),
            threads,
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            timings: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            details: toml::Table::new(),
            clock: Some(Instant::now()),
        }
    }

    /// Runs `f`, recording its wall time under `stage`.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.push(Timing {
            stage: stage.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(Artifact::of(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(Artifact::of(path)?);
        Ok(())
    }

    pub fn detail(&mut self, key: &str, value: impl Into<toml::Value>) {
        self.details.insert(key.to_string(), value.into());
    }

    /// Writes the manifest as TOML and returns its path.
    pub fn write(mut self, path: &Path) -> Result<PathBuf> {
        if let Some(c) = self.clock.take() {
            self.timings.push(Timing {
                stage: "total".into(),
                seconds: c.elapsed().as_secs_f64(),
            });
        }
        let text = toml::to_string_pretty(&self).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(path, text).at(path)?;
        Ok(path.to_path_buf())
    }
}
