use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use drs_core::drs::MaxEstimate;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::LabError;
use crate::formats::write_json;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn version_string() -> String {
    match option_env!("DRSLAB_GIT_REV") {
        Some(rev) => format!("drslab {} ({rev})", env!("CARGO_PKG_VERSION")),
        None => format!("drslab {}", env!("CARGO_PKG_VERSION")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub seed: u64,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Paths relative to the run's output directory.
    pub outputs: Vec<String>,
    /// Final max estimate per sampling arm.
    pub max_estimates: BTreeMap<String, MaxEstimate>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: Experiment,
    pub version: String,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub seed_offset: u64,
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedEntry>,
    pub outputs: Vec<String>,
    pub total_seconds: f64,
}

/// Keeps `manifest.json` on disk in sync with the run: written when the run
/// starts, after every seed, and once more when it ends.
pub struct ManifestWriter {
    path: PathBuf,
    root: PathBuf,
    started: Instant,
    pub manifest: RunManifest,
}

impl ManifestWriter {
    pub fn begin(root: &Path, experiment: Experiment, config: &ExperimentConfig, seed_offset: u64) -> Result<Self, LabError> {
        let w = Self {
            path: root.join(MANIFEST_FILE),
            root: root.to_path_buf(),
            started: Instant::now(),
            manifest: RunManifest {
                experiment,
                version: version_string(),
                status: RunStatus::Running,
                error: None,
                seed_offset,
                config: config.clone(),
                seeds: Vec::new(),
                outputs: Vec::new(),
                total_seconds: 0.0,
            },
        };
        w.write()?;
        Ok(w)
    }

    pub fn relative(&self, path: &Path) -> String {
        path.strip_prefix(&self.root)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/")
    }

    pub fn add_seed(&mut self, entry: SeedEntry) -> Result<(), LabError> {
        self.manifest.seeds.push(entry);
        self.write()
    }

    pub fn add_output(&mut self, path: &Path) {
        let rel = self.relative(path);
        self.manifest.outputs.push(rel);
    }

    pub fn finish(mut self, result: Result<(), &LabError>) -> Result<RunManifest, LabError> {
        self.manifest.total_seconds = self.started.elapsed().as_secs_f64();
        match result {
            Ok(()) => self.manifest.status = RunStatus::Completed,
            Err(e) => {
                self.manifest.status = RunStatus::Failed;
                self.manifest.error = Some(e.to_string());
            }
        }
        self.add_output_self();
        self.write()?;
        Ok(self.manifest)
    }

    fn add_output_self(&mut self) {
        if !self.manifest.outputs.iter().any(|o| o == MANIFEST_FILE) {
            self.manifest.outputs.push(MANIFEST_FILE.into());
        }
    }

    fn write(&self) -> Result<(), LabError> {
        write_json(&self.path, &self.manifest)
    }
}

/// Per-seed bookkeeping collected while a seed's pipeline runs.
pub struct SeedTracker {
    pub seed: u64,
    started: Instant,
    pub outputs: Vec<PathBuf>,
    pub max_estimates: BTreeMap<String, MaxEstimate>,
}

impl SeedTracker {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            started: Instant::now(),
            outputs: Vec::new(),
            max_estimates: BTreeMap::new(),
        }
    }

    pub fn output(&mut self, path: PathBuf) -> PathBuf {
        self.outputs.push(path.clone());
        path
    }

    pub fn entry(self, writer: &ManifestWriter, error: Option<&LabError>) -> SeedEntry {
        SeedEntry {
            seed: self.seed,
            status: if error.is_some() { RunStatus::Failed } else { RunStatus::Completed },
            error: error.map(ToString::to_string),
            outputs: self.outputs.iter().map(|p| writer.relative(p)).collect(),
            max_estimates: self.max_estimates,
            seconds: self.started.elapsed().as_secs_f64(),
        }
    }
}
