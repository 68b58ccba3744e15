use std::fs;
use std::path::Path;
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use crate::config::{sha256_hex, ExperimentConfig};
use crate::error::CliError;
use crate::experiments;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
    pub files: Vec<FileEntry>,
}

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug)]
pub struct RunResult {
    pub manifest: RunManifest,
    pub summary: Vec<String>,
}

/// Runs the experiment and writes its files, then the manifest. Nothing is
/// written if the experiment fails; an old manifest in the output
/// directory is removed before any file is replaced.
pub fn run(cfg: &ExperimentConfig) -> Result<RunResult, CliError> {
    let start = Instant::now();
    let out = experiments::execute(cfg)?;
    let dir: &Path = &cfg.out;
    fs::create_dir_all(dir)?;
    let stale = dir.join(MANIFEST);
    if stale.exists() {
        fs::remove_file(&stale)?;
    }
    let mut files = Vec::with_capacity(out.files.len());
    for (name, bytes) in &out.files {
        fs::write(dir.join(name), bytes)?;
        files.push(FileEntry {
            name: name.clone(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: cfg.kind.name().to_string(),
        config_sha256: cfg.hash.clone(),
        seed: cfg.seed,
        wall_time_s: start.elapsed().as_secs_f64(),
        files,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(dir.join(MANIFEST), json + "\n")?;
    info!("wrote {} files to {}", manifest.files.len(), dir.display());
    Ok(RunResult {
        manifest,
        summary: out.summary,
    })
}
