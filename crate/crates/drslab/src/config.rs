use std::fmt;
use std::path::{Path, PathBuf};

use drs_core::drs::DrsConfig;
use drs_core::target::{make_grid_mixture, MixtureSpec};
use drs_core::train::{CalibrationConfig, KeepTrainingConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Table1,
    Ablation,
    Sweep,
    Oracle,
    Interp,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Table1 => "table1",
            Experiment::Ablation => "ablation",
            Experiment::Sweep => "sweep",
            Experiment::Oracle => "oracle",
            Experiment::Interp => "interp",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Grid parameters; turned into a [`MixtureSpec`] at run time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MixtureParams {
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
    pub sigma: f64,
}

impl Default for MixtureParams {
    fn default() -> Self {
        Self {
            rows: 5,
            cols: 5,
            spacing: 2.0,
            sigma: 0.05,
        }
    }
}

impl MixtureParams {
    pub fn build(&self) -> Result<MixtureSpec, LabError> {
        Ok(make_grid_mixture(self.rows, self.cols, self.spacing, self.sigma)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    /// Accepted samples per check.
    pub samples: usize,
    /// KS significance level.
    pub alpha: f64,
    /// Uniform proposal on `[-w, w]` for the 1D check.
    pub half_width: f64,
    /// Std of the Gaussian proposal for the 2D mixture check.
    pub proposal_scale: f64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            alpha: 0.01,
            half_width: 5.0,
            proposal_scale: 3.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; when present it must match the experiment being run.
    pub experiment: Option<Experiment>,
    pub seeds: Vec<u64>,
    pub mixture: MixtureParams,
    pub train: TrainConfig,
    pub keep_training: KeepTrainingConfig,
    pub calibration: CalibrationConfig,
    pub drs: DrsConfig,
    /// Samples per evaluated arm.
    pub eval_samples: usize,
    pub sweep_percentiles: Vec<f64>,
    pub oracle: OracleConfig,
    pub output_dir: PathBuf,
    /// Write per-draw DRS logs (`samples_seed*.csv`).
    pub write_sample_logs: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seeds: vec![1, 2, 3, 4, 5],
            mixture: MixtureParams::default(),
            train: TrainConfig::default(),
            keep_training: KeepTrainingConfig::default(),
            calibration: CalibrationConfig::default(),
            drs: DrsConfig::default(),
            eval_samples: 10_000,
            sweep_percentiles: (0..10).map(|i| f64::from(i) * 10.0).collect(),
            oracle: OracleConfig::default(),
            output_dir: PathBuf::from("runs"),
            write_sample_logs: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        serde_json::from_str(text).map_err(|e| LabError::Config(format!("invalid config JSON: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self, experiment: Experiment) -> Result<(), LabError> {
        if let Some(declared) = self.experiment {
            if declared != experiment {
                return Err(LabError::Config(format!(
                    "config is for experiment `{declared}` but `{experiment}` was requested"
                )));
            }
        }
        if self.seeds.is_empty() {
            return Err(LabError::Config("at least one seed is required".into()));
        }
        if self.eval_samples == 0 {
            return Err(LabError::Config("eval_samples must be positive".into()));
        }
        self.mixture.build()?;
        self.train.validate()?;
        self.drs.validate()?;
        if self.sweep_percentiles.iter().any(|p| !(0.0..=100.0).contains(p)) {
            return Err(LabError::Config("sweep percentiles must lie in [0, 100]".into()));
        }
        if !(self.oracle.alpha > 0.0 && self.oracle.alpha < 1.0) || self.oracle.samples == 0 {
            return Err(LabError::Config("oracle needs samples > 0 and alpha in (0, 1)".into()));
        }
        Ok(())
    }

    /// Seeds after applying a CLI offset.
    pub fn effective_seeds(&self, offset: u64) -> Vec<u64> {
        self.seeds.iter().map(|s| s.wrapping_add(offset)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let c = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.sweep_percentiles.len(), 10);
        assert!(c.validate(Experiment::Table1).is_ok());
    }

    #[test]
    fn nested_overrides() {
        let c = ExperimentConfig::from_json(
            r#"{"experiment": "sweep", "seeds": [7], "train": {"steps": 10},
                "drs": {"gamma_policy": {"kind": "fixed", "gamma": -2.0}}}"#,
        )
        .unwrap();
        assert_eq!(c.train.steps, 10);
        assert_eq!(c.train.batch_size, 256);
        assert_eq!(c.seeds, vec![7]);
        assert!(c.validate(Experiment::Sweep).is_ok());
        assert!(matches!(c.validate(Experiment::Table1), Err(LabError::Config(_))));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_json(r#"{"nonsense": 1}"#).is_err());
        let c = ExperimentConfig::from_json(r#"{"seeds": []}"#).unwrap();
        assert!(c.validate(Experiment::Oracle).is_err());
        let c = ExperimentConfig::from_json(r#"{"mixture": {"sigma": -1}}"#).unwrap();
        assert!(c.validate(Experiment::Oracle).is_err());
    }

    #[test]
    fn seed_offset() {
        let c = ExperimentConfig::default();
        assert_eq!(c.effective_seeds(10), vec![11, 12, 13, 14, 15]);
    }
}
