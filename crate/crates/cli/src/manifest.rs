use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliResult, Context};

/// Record of one command invocation, written as `manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub config: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    /// Input path → sha256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    /// Output file name → sha256 of its bytes.
    pub outputs: BTreeMap<String, String>,
    pub wall_clock_secs: f64,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).context_runtime(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub struct ManifestBuilder {
    started: Instant,
    manifest: Manifest,
}

impl ManifestBuilder {
    pub fn new(command: &str, config: &impl Serialize, seed: Option<u64>) -> Self {
        ManifestBuilder {
            started: Instant::now(),
            manifest: Manifest {
                command: command.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                seed,
                config: serde_json::to_value(config).expect("config serializes"),
                config_hash: None,
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
                wall_clock_secs: 0.0,
            },
        }
    }

    pub fn config_hash(mut self, hash: String) -> Self {
        self.manifest.config_hash = Some(hash);
        self
    }

    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        let digest = sha256_file(path)?;
        self.manifest.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    /// Record files already written inside `dir`, then write `dir/manifest.json`.
    pub fn finish(mut self, dir: &Path, outputs: &[&str]) -> CliResult<Manifest> {
        for name in outputs {
            let digest = sha256_file(&dir.join(name))?;
            self.manifest.outputs.insert(name.to_string(), digest);
        }
        self.manifest.wall_clock_secs = self.started.elapsed().as_secs_f64();
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        std::fs::write(&path, text + "\n").context_runtime(|| format!("writing {}", path.display()))?;
        Ok(self.manifest)
    }
}

pub fn read_manifest(path: &Path) -> CliResult<Manifest> {
    let text = std::fs::read_to_string(path).context_runtime(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).context_runtime(|| format!("parsing {}", path.display()))
}
