use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to re-run a command and get identical files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, as given.
    pub argv: Vec<String>,
    pub working_dir: PathBuf,
    pub inputs: Vec<InputRecord>,
    pub config: Option<PathBuf>,
    pub saliency: Option<String>,
    pub disparity: Option<String>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String]) -> Result<Self> {
        Ok(RunManifest {
            command: command.to_string(),
            argv: argv.to_vec(),
            working_dir: std::env::current_dir()?,
            inputs: Vec::new(),
            config: None,
            saliency: None,
            disparity: None,
            outputs: Vec::new(),
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        if self.inputs.iter().any(|r| r.path == path) {
            return Ok(());
        }
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(InputRecord {
            path: path.to_path_buf(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Checks recorded input digests against the files on disk.
    pub fn verify_inputs(&self) -> Result<()> {
        for rec in &self.inputs {
            let path = self.working_dir.join(&rec.path);
            let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
            let digest = sha256_hex(&bytes);
            anyhow::ensure!(digest == rec.sha256, "{} changed since the recorded run", path.display());
        }
        Ok(())
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `report.json` → `report.manifest.json`; directories get `manifest.json`.
pub fn manifest_path(out: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        return out.join("manifest.json");
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.manifest.json"))
}
