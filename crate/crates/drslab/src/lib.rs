//! Experiment runner for discriminator rejection sampling on the 2D
//! Gaussian-mixture benchmark: configs, file formats, the headline
//! experiments and the `drslab` command line.

pub mod config;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod manifest;
pub mod oracle;
pub mod sampling;

pub use config::{Experiment, ExperimentConfig};
pub use error::LabError;
pub use experiments::{run_experiment, ExperimentResult};
