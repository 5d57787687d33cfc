//! Run manifests: what was run, on which inputs, producing which outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use jointspace::format::write_atomic;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

/// Refinement outcome of one adv-proc run.
#[derive(Clone, Debug, Serialize)]
pub struct RefinementRecord {
    pub run: String,
    pub rounds: usize,
    pub chosen_round: usize,
    pub restart: usize,
    pub mean_similarity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub inputs: Vec<FileDigest>,
    /// Relative to the manifest's directory.
    pub outputs: Vec<FileDigest>,
    pub stages: Vec<StageTime>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub refinement: Vec<RefinementRecord>,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects a manifest while a command runs; every output goes through
/// [`Run::write`] so it is written atomically and checksummed.
pub struct Run {
    dir: PathBuf,
    manifest: RunManifest,
    stage: Option<(String, Instant)>,
}

impl Run {
    pub fn new(command: &str, config: &ExperimentConfig, dir: PathBuf) -> Self {
        Run {
            dir,
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.to_string(),
                config: config.clone(),
                inputs: Vec::new(),
                outputs: Vec::new(),
                stages: Vec::new(),
                refinement: Vec::new(),
            },
            stage: None,
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Ends the current stage (if any) and starts timing `name`.
    pub fn stage(&mut self, name: &str) {
        self.end_stage();
        log::info!("{}: {name}", self.manifest.command);
        self.stage = Some((name.to_string(), Instant::now()));
    }

    fn end_stage(&mut self) {
        if let Some((stage, t0)) = self.stage.take() {
            self.manifest.stages.push(StageTime {
                stage,
                seconds: t0.elapsed().as_secs_f64(),
            });
        }
    }

    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        let digest = if path.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            entries.sort();
            let mut h = Sha256::new();
            for p in &entries {
                h.update(p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default());
                h.update(sha256_file(p)?);
            }
            h.finalize().iter().map(|b| format!("{b:02x}")).collect()
        } else {
            sha256_file(path)?
        };
        self.manifest.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: digest,
        });
        Ok(())
    }

    /// Writes `contents` to `rel` under the run directory.
    pub fn write(&mut self, rel: &str, contents: &[u8]) -> CliResult<PathBuf> {
        let path = self.dir.join(rel);
        write_atomic(&path, contents)?;
        self.manifest.outputs.push(FileDigest {
            path: rel.to_string(),
            sha256: sha256_hex(contents),
        });
        Ok(path)
    }

    pub fn refinement(&mut self, record: RefinementRecord) {
        self.manifest.refinement.push(record);
    }

    pub fn outputs(&self) -> &[FileDigest] {
        &self.manifest.outputs
    }

    /// Writes `manifest.json` and returns every file produced, manifest last.
    pub fn finish(mut self) -> CliResult<Vec<PathBuf>> {
        self.end_stage();
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        let mut files: Vec<PathBuf> = self.manifest.outputs.iter().map(|o| self.dir.join(&o.path)).collect();
        let path = self.dir.join("manifest.json");
        write_atomic(&path, format!("{json}\n").as_bytes())?;
        files.push(path);
        Ok(files)
    }
}
