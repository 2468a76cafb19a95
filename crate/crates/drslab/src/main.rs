use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use drslab::{run_experiment, Experiment, ExperimentConfig, LabError};

/// Run a discriminator rejection sampling experiment.
#[derive(Debug, Parser)]
#[command(name = "drslab", version)]
struct Cli {
    experiment: Experiment,
    /// Experiment config (JSON). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Added to every configured seed.
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
    /// Overrides the config's output_dir.
    #[arg(long, env = "DRSLAB_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
}

fn run(cli: &Cli) -> Result<(), LabError> {
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let root = cli.output_dir.clone().unwrap_or_else(|| config.output_dir.clone());
    let result = run_experiment(cli.experiment, &config, &root, cli.seed_offset)?;
    println!("{}", serde_json::to_string(&result)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::to_string(&e.to_report()).unwrap_or_else(|_| format!("{{\"error\":{{\"kind\":\"{}\"}}}}", e.kind()));
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
