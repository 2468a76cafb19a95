//! The headline experiments. Each seed's pipeline is sequential and draws
//! from named substreams of its seed, so arms do not perturb one another.

use std::path::{Path, PathBuf};

use drs_core::drs::{
    acceptance_prob, burn_in, drs_sample_from, f_hat, select_gamma, Critic, DrsConfig, DrsOutcome,
    SampleSource,
};
use drs_core::eval::{
    acceptance_rate_sweep, acceptance_vs_quality_scatter, assign_modes, default_alphas, evaluate, histogram,
    interpolation_trace, linear_edges, AcceptanceParams, EvalReport, SweepPoint, TracePoint,
};
use drs_core::loss::LossKind;
use drs_core::rng::substream;
use drs_core::stats::{mean, sample_std};
use drs_core::target::MixtureSpec;
use drs_core::train::{
    fit_calibration_layer, keep_training, train_gan, CalibratedCritic, CriticKind, KeepTrainingOutcome, TrainedGan,
};
use drs_core::Point;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::LabError;
use crate::formats::{
    save_mixture, save_network, write_histograms_csv, write_history_csv, write_json, write_points_csv,
    write_sample_log, write_scatter_csv, write_sweep_csv, write_trace_csv,
};
use crate::manifest::{ManifestWriter, RunManifest, SeedTracker};
use crate::oracle::{run_checks, OracleReport};
use crate::sampling::{threshold_sample, unfiltered};

/// Trained models for one seed, shared by every experiment.
#[derive(Debug, Clone)]
pub struct SeedModels {
    pub seed: u64,
    pub gan: TrainedGan,
    pub keep_training: KeepTrainingOutcome,
    /// Critic over the discriminator as trained with the generator.
    pub critic_no_ft: CalibratedCritic,
    /// Critic over the keep-trained discriminator.
    pub critic_ft: CalibratedCritic,
}

/// Hinge critics get an affine calibration head fit on fresh real and fake
/// samples; non-saturating critics already output logits.
fn make_critic(
    disc: &drs_core::nn::Network,
    gan: &TrainedGan,
    mixture: &MixtureSpec,
    cfg: &ExperimentConfig,
    seed: u64,
    tag: &str,
) -> Result<CalibratedCritic, LabError> {
    match gan.loss_kind {
        LossKind::NonSaturating => Ok(CalibratedCritic::direct(disc.clone())),
        LossKind::Hinge => {
            let n = cfg.calibration.samples_per_class;
            let real = mixture.sample_n(&mut substream(seed, &format!("calibration-real-{tag}")), n);
            let fake = unfiltered(
                &gan.generator_source(),
                n,
                &mut substream(seed, &format!("calibration-fake-{tag}")),
            )?;
            Ok(fit_calibration_layer(disc, &real, &fake, &cfg.calibration)?)
        }
    }
}

pub fn prepare_models(cfg: &ExperimentConfig, mixture: &MixtureSpec, seed: u64) -> Result<SeedModels, LabError> {
    let gan = train_gan(mixture, &cfg.train, seed)?;
    let kt = keep_training(&gan, mixture, &cfg.keep_training, seed)?;
    let critic_no_ft = make_critic(&gan.discriminator, &gan, mixture, cfg, seed, "no-ft")?;
    let critic_ft = make_critic(&kt.discriminator, &gan, mixture, cfg, seed, "ft")?;
    Ok(SeedModels {
        seed,
        gan,
        keep_training: kt,
        critic_no_ft,
        critic_ft,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticSummary {
    pub kind: CriticKind,
    pub weight: f64,
    pub bias: f64,
}

impl From<&CalibratedCritic> for CriticSummary {
    fn from(c: &CalibratedCritic) -> Self {
        Self {
            kind: c.kind,
            weight: c.weight,
            bias: c.bias,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeepTrainingSummary {
    pub initial_validation_loss: f64,
    pub best_validation_loss: f64,
    pub best_step: usize,
    pub steps_run: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub keep_training: KeepTrainingSummary,
    pub critic_no_ft: CriticSummary,
    pub critic_ft: CriticSummary,
}

fn save_models(models: &SeedModels, dir: &Path, tracker: &mut SeedTracker) -> Result<ModelSummary, LabError> {
    write_history_csv(&models.gan.history, &tracker.output(dir.join("history.csv")))?;
    save_network(&models.gan.generator, &tracker.output(dir.join("generator.json")))?;
    save_network(&models.gan.discriminator, &tracker.output(dir.join("discriminator.json")))?;
    save_network(&models.keep_training.discriminator, &tracker.output(dir.join("discriminator_ft.json")))?;
    let kt = &models.keep_training;
    Ok(ModelSummary {
        keep_training: KeepTrainingSummary {
            initial_validation_loss: kt.initial_validation_loss,
            best_validation_loss: kt.best_validation_loss,
            best_step: kt.best_step,
            steps_run: kt.steps_run,
        },
        critic_no_ft: (&models.critic_no_ft).into(),
        critic_ft: (&models.critic_ft).into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrsSummary {
    pub acceptance_rate: f64,
    pub accepted: usize,
    pub draws: usize,
    pub burn_in_max: f64,
    pub final_max: f64,
    pub max_updates: u64,
}

impl DrsSummary {
    fn of(out: &DrsOutcome<Point>) -> Self {
        Self {
            acceptance_rate: out.acceptance_rate(),
            accepted: out.accepted.len(),
            draws: out.all.len(),
            burn_in_max: out.burn_in_max,
            final_max: out.max_estimate.max_logit,
            max_updates: out.max_estimate.update_count,
        }
    }
}

/// Burn-in on `burnin[-tag]`, then sampling on `sample[-tag]`.
pub fn run_drs<S, C>(source: &S, critic: &C, config: &DrsConfig, seed: u64, tag: &str) -> Result<DrsOutcome<S::Point>, LabError>
where
    S: SampleSource,
    C: Critic<S::Point> + ?Sized,
{
    config.validate()?;
    let name = |base: &str| if tag.is_empty() { base.to_string() } else { format!("{base}-{tag}") };
    let start = burn_in(source, critic, config.burn_in_count, &mut substream(seed, &name("burnin")))?;
    Ok(drs_sample_from(source, critic, config, start, &mut substream(seed, &name("sample")))?)
}

fn accepted_points(out: &DrsOutcome<Point>) -> Vec<Point> {
    out.accepted.iter().map(|r| r.point).collect()
}

/// Mean and sample std over seeds; `std` is absent with a single seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: Option<f64>,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        Self {
            mean: mean(values),
            std: (values.len() > 1).then(|| sample_std(values)),
        }
    }

    fn cells(&self) -> [String; 2] {
        [self.mean.to_string(), self.std.map(|s| s.to_string()).unwrap_or_default()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmAggregate {
    pub n_seeds: usize,
    pub recovered_modes: MeanStd,
    pub hq_fraction: MeanStd,
    pub hq_residual_std: MeanStd,
    pub within_k_std: [MeanStd; 4],
    pub acceptance_rate: Option<MeanStd>,
}

impl ArmAggregate {
    pub fn of(reports: &[&EvalReport], rates: Option<&[f64]>) -> Self {
        let col = |f: &dyn Fn(&EvalReport) -> f64| MeanStd::of(&reports.iter().map(|r| f(r)).collect::<Vec<_>>());
        Self {
            n_seeds: reports.len(),
            recovered_modes: col(&|r| r.recovered_modes as f64),
            hq_fraction: col(&|r| r.hq_fraction),
            hq_residual_std: col(&|r| r.hq_residual_std),
            within_k_std: [0, 1, 2, 3].map(|k| col(&|r| r.within_k_std[k])),
            acceptance_rate: rates.map(MeanStd::of),
        }
    }
}

const REPORT_HEADER: [&str; 9] = [
    "recovered_modes",
    "hq_fraction",
    "hq_residual_std",
    "within_1std",
    "within_2std",
    "within_3std",
    "within_4std",
    "n_samples",
    "acceptance_rate",
];

fn report_cells(r: &EvalReport, rate: Option<f64>) -> Vec<String> {
    let mut v = vec![
        r.recovered_modes.to_string(),
        r.hq_fraction.to_string(),
        r.hq_residual_std.to_string(),
    ];
    v.extend(r.within_k_std.iter().map(ToString::to_string));
    v.push(r.n_samples.to_string());
    v.push(rate.map(|x| x.to_string()).unwrap_or_default());
    v
}

fn aggregate_header() -> Vec<String> {
    let mut h = vec!["arm".to_string(), "n_seeds".to_string()];
    for name in REPORT_HEADER.iter().filter(|n| **n != "n_samples") {
        h.push(format!("{name}_mean"));
        h.push(format!("{name}_std"));
    }
    h
}

fn aggregate_cells(arm: &str, a: &ArmAggregate) -> Vec<String> {
    let mut v = vec![arm.to_string(), a.n_seeds.to_string()];
    for m in [&a.recovered_modes, &a.hq_fraction, &a.hq_residual_std]
        .into_iter()
        .chain(a.within_k_std.iter())
    {
        v.extend(m.cells());
    }
    match &a.acceptance_rate {
        Some(m) => v.extend(m.cells()),
        None => v.extend([String::new(), String::new()]),
    }
    v
}

fn write_aggregate_csv(rows: &[(&str, &ArmAggregate)], path: &Path) -> Result<(), LabError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(aggregate_header())?;
    for (arm, a) in rows {
        w.write_record(aggregate_cells(arm, a))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

/// Rows are `(seed, arm, report, acceptance_rate)`.
fn write_per_seed_csv(rows: &[(u64, &str, &EvalReport, Option<f64>)], path: &Path) -> Result<(), LabError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["seed", "arm"];
    header.extend(REPORT_HEADER);
    w.write_record(header)?;
    for (seed, arm, r, rate) in rows {
        let mut cells = vec![seed.to_string(), arm.to_string()];
        cells.extend(report_cells(r, *rate));
        w.write_record(cells)?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

/// Errors that fail a single seed rather than the whole run.
fn is_seed_failure(e: &LabError) -> bool {
    matches!(
        e,
        LabError::Core(
            drs_core::Error::Diverged { .. }
                | drs_core::Error::Numeric(_)
                | drs_core::Error::AcceptanceFloor { .. }
                | drs_core::Error::EnvelopeViolation { .. }
        )
    )
}

/// Shared scaffolding: output directory, mixture, manifest, per-seed loop
/// with failure isolation.
pub struct Run<'a> {
    pub config: &'a ExperimentConfig,
    pub mixture: MixtureSpec,
    pub root: PathBuf,
    pub manifest: ManifestWriter,
}

impl<'a> Run<'a> {
    pub fn begin(experiment: Experiment, config: &'a ExperimentConfig, root: &Path, seed_offset: u64) -> Result<Self, LabError> {
        config.validate(experiment)?;
        std::fs::create_dir_all(root).map_err(|e| LabError::io(root, e))?;
        let mixture = config.mixture.build()?;
        let mut manifest = ManifestWriter::begin(root, experiment, config, seed_offset)?;
        let mpath = root.join("mixture.json");
        save_mixture(&mixture, &mpath)?;
        manifest.add_output(&mpath);
        Ok(Self {
            config,
            mixture,
            root: root.to_path_buf(),
            manifest,
        })
    }

    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        self.root.join(format!("seed_{seed}"))
    }

    /// Runs `f` per seed. Seed-level failures are recorded and skipped with a
    /// warning; anything else aborts the run.
    pub fn for_each_seed<T>(
        &mut self,
        seeds: &[u64],
        mut f: impl FnMut(&Self, &mut SeedTracker) -> Result<T, LabError>,
    ) -> Result<Vec<T>, LabError> {
        let mut out = Vec::new();
        for &seed in seeds {
            let mut tracker = SeedTracker::new(seed);
            match f(self, &mut tracker) {
                Ok(v) => {
                    let entry = tracker.entry(&self.manifest, None);
                    self.manifest.add_seed(entry)?;
                    out.push(v);
                }
                Err(e) if is_seed_failure(&e) => {
                    eprintln!("warning: seed {seed} failed and is excluded from aggregates: {e}");
                    let entry = tracker.entry(&self.manifest, Some(&e));
                    self.manifest.add_seed(entry)?;
                }
                Err(e) => return Err(e),
            }
        }
        if out.is_empty() {
            return Err(LabError::AllSeedsFailed);
        }
        Ok(out)
    }

    pub fn output(&mut self, name: &str) -> PathBuf {
        let p = self.root.join(name);
        self.manifest.add_output(&p);
        p
    }

    pub fn finish(self, result: Result<(), &LabError>) -> Result<RunManifest, LabError> {
        self.manifest.finish(result)
    }
}

/// Models come either freshly trained or from a caller-supplied cache.
pub trait ModelProvider {
    fn models(&mut self, cfg: &ExperimentConfig, mixture: &MixtureSpec, seed: u64) -> Result<SeedModels, LabError>;
}

pub struct TrainFresh;

impl ModelProvider for TrainFresh {
    fn models(&mut self, cfg: &ExperimentConfig, mixture: &MixtureSpec, seed: u64) -> Result<SeedModels, LabError> {
        prepare_models(cfg, mixture, seed)
    }
}

impl<F> ModelProvider for F
where
    F: FnMut(&ExperimentConfig, &MixtureSpec, u64) -> Result<SeedModels, LabError>,
{
    fn models(&mut self, cfg: &ExperimentConfig, mixture: &MixtureSpec, seed: u64) -> Result<SeedModels, LabError> {
        self(cfg, mixture, seed)
    }
}

// ---------------------------------------------------------------- table 1

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Seed {
    pub seed: u64,
    pub without_drs: EvalReport,
    pub with_drs: EvalReport,
    pub drs: DrsSummary,
    pub models: ModelSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Result {
    pub seeds: Vec<Table1Seed>,
    pub failed_seeds: Vec<u64>,
    pub without_drs: ArmAggregate,
    pub with_drs: ArmAggregate,
}

const HIST_BINS: usize = 50;

fn table1_seed(run: &Run<'_>, t: &mut SeedTracker, models: &SeedModels) -> Result<Table1Seed, LabError> {
    let cfg = run.config;
    let seed = models.seed;
    let dir = run.seed_dir(seed);
    let model_summary = save_models(models, &dir, t)?;
    let gen = models.gan.generator_source();

    let plain = unfiltered(&gen, cfg.eval_samples, &mut substream(seed, "eval"))?;
    write_points_csv(&plain, &t.output(dir.join("unfiltered.csv")))?;
    let drs = run_drs(&gen, &models.critic_ft, &cfg.drs, seed, "")?;
    t.max_estimates.insert("drs_ft".into(), drs.max_estimate);
    let kept = accepted_points(&drs);
    write_points_csv(&kept, &t.output(dir.join("drs_accepted.csv")))?;
    if cfg.write_sample_logs {
        write_sample_log(&drs.all, &t.output(dir.join("samples.csv")))?;
    }

    // Plot data: acceptance probability against distance to the nearest mode,
    // and F̂ / acceptance-probability histograms before and after the γ shift.
    let all_points: Vec<Point> = drs.all.iter().map(|r| r.point).collect();
    let scatter = acceptance_vs_quality_scatter(&drs.all, &assign_modes(&all_points, &run.mixture))?;
    write_scatter_csv(&scatter, &t.output(dir.join("scatter.csv")))?;
    let f_after: Vec<f64> = drs.all.iter().map(|r| r.f_value).collect();
    let f_before: Vec<f64> = drs.all.iter().map(|r| r.f_value + r.gamma).collect();
    let p_before: Vec<f64> = f_before.iter().map(|&f| acceptance_prob(f)).collect();
    let p_after: Vec<f64> = drs.all.iter().map(|r| r.acceptance_prob).collect();
    let f_edges = linear_edges(-20.0, 10.0, HIST_BINS);
    let p_edges = linear_edges(0.0, 1.0, HIST_BINS);
    write_histograms_csv(
        &[
            ("f_before_gamma", &histogram(&f_before, &f_edges)?),
            ("f_after_gamma", &histogram(&f_after, &f_edges)?),
            ("prob_before_gamma", &histogram(&p_before, &p_edges)?),
            ("prob_after_gamma", &histogram(&p_after, &p_edges)?),
        ],
        &t.output(dir.join("histograms.csv")),
    )?;

    let rec = Table1Seed {
        seed,
        without_drs: evaluate(&plain, &run.mixture),
        with_drs: evaluate(&kept, &run.mixture),
        drs: DrsSummary::of(&drs),
        models: model_summary,
    };
    write_json(&t.output(dir.join("report.json")), &rec)?;
    Ok(rec)
}

pub fn run_table1(cfg: &ExperimentConfig, root: &Path, seed_offset: u64) -> Result<Table1Result, LabError> {
    run_table1_with(cfg, root, seed_offset, &mut TrainFresh)
}

pub fn run_table1_with(
    cfg: &ExperimentConfig,
    root: &Path,
    seed_offset: u64,
    provider: &mut dyn ModelProvider,
) -> Result<Table1Result, LabError> {
    let mut run = Run::begin(Experiment::Table1, cfg, root, seed_offset)?;
    let seeds = cfg.effective_seeds(seed_offset);
    let result = (|| {
        let per_seed = run.for_each_seed(&seeds, |run, t| {
            let models = provider.models(run.config, &run.mixture, t.seed)?;
            table1_seed(run, t, &models)
        })?;
        let without: Vec<&EvalReport> = per_seed.iter().map(|s| &s.without_drs).collect();
        let with: Vec<&EvalReport> = per_seed.iter().map(|s| &s.with_drs).collect();
        let rates: Vec<f64> = per_seed.iter().map(|s| s.drs.acceptance_rate).collect();
        let res = Table1Result {
            failed_seeds: seeds
                .iter()
                .copied()
                .filter(|s| !per_seed.iter().any(|p| p.seed == *s))
                .collect(),
            without_drs: ArmAggregate::of(&without, None),
            with_drs: ArmAggregate::of(&with, Some(&rates)),
            seeds: per_seed,
        };
        let rows: Vec<(u64, &str, &EvalReport, Option<f64>)> = res
            .seeds
            .iter()
            .flat_map(|s| {
                [
                    (s.seed, "without_drs", &s.without_drs, None),
                    (s.seed, "with_drs", &s.with_drs, Some(s.drs.acceptance_rate)),
                ]
            })
            .collect();
        write_per_seed_csv(&rows, &run.output("table1_seeds.csv"))?;
        write_aggregate_csv(
            &[("without_drs", &res.without_drs), ("with_drs", &res.with_drs)],
            &run.output("table1.csv"),
        )?;
        write_json(&run.output("table1.json"), &res)?;
        Ok(res)
    })();
    run.finish(result.as_ref().map(|_| ()))?;
    result
}

// ---------------------------------------------------------------- ablation

pub const ABLATION_ARMS: [&str; 6] = [
    "ground_truth",
    "vanilla",
    "threshold_no_ft",
    "threshold_ft",
    "drs_no_ft",
    "drs_ft",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub arm: String,
    /// Kept / proposed; absent for arms that do not filter.
    pub acceptance_rate: Option<f64>,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationSeed {
    pub seed: u64,
    pub rows: Vec<AblationRow>,
    pub models: ModelSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub seeds: Vec<AblationSeed>,
    pub failed_seeds: Vec<u64>,
    /// One aggregate per arm, in [`ABLATION_ARMS`] order.
    pub aggregate: Vec<(String, ArmAggregate)>,
}

impl AblationResult {
    pub fn arm(&self, name: &str) -> Option<&ArmAggregate> {
        self.aggregate.iter().find(|(n, _)| n == name).map(|(_, a)| a)
    }
}

fn ablation_seed(run: &Run<'_>, t: &mut SeedTracker, models: &SeedModels) -> Result<AblationSeed, LabError> {
    let cfg = run.config;
    let seed = models.seed;
    let n = cfg.eval_samples;
    let dir = run.seed_dir(seed);
    let model_summary = save_models(models, &dir, t)?;
    let gen = models.gan.generator_source();
    let drs_cfg = DrsConfig {
        target_count: n,
        ..cfg.drs
    };

    let truth = run.mixture.sample_n(&mut substream(seed, "ground-truth"), n);
    let plain = unfiltered(&gen, n, &mut substream(seed, "eval"))?;
    let drs_no_ft = run_drs(&gen, &models.critic_no_ft, &drs_cfg, seed, "no-ft")?;
    let drs_ft = run_drs(&gen, &models.critic_ft, &drs_cfg, seed, "")?;
    t.max_estimates.insert("drs_no_ft".into(), drs_no_ft.max_estimate);
    t.max_estimates.insert("drs_ft".into(), drs_ft.max_estimate);
    let thr_no_ft = threshold_sample(
        &gen,
        &models.critic_no_ft,
        drs_no_ft.acceptance_rate(),
        n,
        &mut substream(seed, "threshold-no-ft"),
    )?;
    let thr_ft = threshold_sample(
        &gen,
        &models.critic_ft,
        drs_ft.acceptance_rate(),
        n,
        &mut substream(seed, "threshold-ft"),
    )?;

    let arms: [(&str, Vec<Point>, Option<f64>); 6] = [
        ("ground_truth", truth, None),
        ("vanilla", plain, None),
        ("threshold_no_ft", thr_no_ft.points, Some(thr_no_ft.realized_rate)),
        ("threshold_ft", thr_ft.points, Some(thr_ft.realized_rate)),
        ("drs_no_ft", accepted_points(&drs_no_ft), Some(drs_no_ft.acceptance_rate())),
        ("drs_ft", accepted_points(&drs_ft), Some(drs_ft.acceptance_rate())),
    ];
    let mut rows = Vec::with_capacity(6);
    for (arm, points, rate) in arms {
        write_points_csv(&points, &t.output(dir.join(format!("ablation_{arm}.csv"))))?;
        rows.push(AblationRow {
            arm: arm.to_string(),
            acceptance_rate: rate,
            report: evaluate(&points, &run.mixture),
        });
    }
    let table: Vec<(u64, &str, &EvalReport, Option<f64>)> =
        rows.iter().map(|r| (seed, r.arm.as_str(), &r.report, r.acceptance_rate)).collect();
    write_per_seed_csv(&table, &t.output(dir.join("ablation.csv")))?;
    Ok(AblationSeed {
        seed,
        rows,
        models: model_summary,
    })
}

pub fn run_ablation(cfg: &ExperimentConfig, root: &Path, seed_offset: u64) -> Result<AblationResult, LabError> {
    run_ablation_with(cfg, root, seed_offset, &mut TrainFresh)
}

pub fn run_ablation_with(
    cfg: &ExperimentConfig,
    root: &Path,
    seed_offset: u64,
    provider: &mut dyn ModelProvider,
) -> Result<AblationResult, LabError> {
    let mut run = Run::begin(Experiment::Ablation, cfg, root, seed_offset)?;
    let seeds = cfg.effective_seeds(seed_offset);
    let result = (|| {
        let per_seed = run.for_each_seed(&seeds, |run, t| {
            let models = provider.models(run.config, &run.mixture, t.seed)?;
            ablation_seed(run, t, &models)
        })?;
        let aggregate: Vec<(String, ArmAggregate)> = ABLATION_ARMS
            .iter()
            .enumerate()
            .map(|(i, arm)| {
                let reports: Vec<&EvalReport> = per_seed.iter().map(|s| &s.rows[i].report).collect();
                let rates: Option<Vec<f64>> = per_seed.iter().map(|s| s.rows[i].acceptance_rate).collect();
                (arm.to_string(), ArmAggregate::of(&reports, rates.as_deref()))
            })
            .collect();
        let res = AblationResult {
            failed_seeds: seeds
                .iter()
                .copied()
                .filter(|s| !per_seed.iter().any(|p| p.seed == *s))
                .collect(),
            seeds: per_seed,
            aggregate,
        };
        let rows: Vec<(&str, &ArmAggregate)> = res.aggregate.iter().map(|(n, a)| (n.as_str(), a)).collect();
        write_aggregate_csv(&rows, &run.output("ablation.csv"))?;
        write_json(&run.output("ablation.json"), &res)?;
        Ok(res)
    })();
    run.finish(result.as_ref().map(|_| ()))?;
    result
}

// ---------------------------------------------------------------- sweep

pub fn run_sweep(cfg: &ExperimentConfig, root: &Path, seed_offset: u64) -> Result<Vec<SweepPoint>, LabError> {
    run_sweep_with(cfg, root, seed_offset, &mut TrainFresh)
}

pub fn run_sweep_with(
    cfg: &ExperimentConfig,
    root: &Path,
    seed_offset: u64,
    provider: &mut dyn ModelProvider,
) -> Result<Vec<SweepPoint>, LabError> {
    let mut run = Run::begin(Experiment::Sweep, cfg, root, seed_offset)?;
    let seeds = cfg.effective_seeds(seed_offset);
    let result = (|| {
        let per_seed = run.for_each_seed(&seeds, |run, t| {
            let models = provider.models(run.config, &run.mixture, t.seed)?;
            let dir = run.seed_dir(t.seed);
            save_models(&models, &dir, t)?;
            let points = acceptance_rate_sweep(
                &models.gan.generator_source(),
                &models.critic_ft,
                &run.mixture,
                &run.config.sweep_percentiles,
                &run.config.drs,
                t.seed,
            )?;
            write_sweep_csv(&points, &t.output(dir.join("sweep.csv")))?;
            Ok(points)
        })?;
        let all: Vec<SweepPoint> = per_seed.into_iter().flatten().collect();
        write_sweep_csv(&all, &run.output("sweep.csv"))?;
        write_json(&run.output("sweep.json"), &all)?;
        Ok(all)
    })();
    run.finish(result.as_ref().map(|_| ()))?;
    result
}

// ---------------------------------------------------------------- oracle

pub fn run_oracle(cfg: &ExperimentConfig, root: &Path, seed_offset: u64) -> Result<OracleReport, LabError> {
    let mut run = Run::begin(Experiment::Oracle, cfg, root, seed_offset)?;
    let result = (|| {
        let mut ocfg = cfg.oracle;
        ocfg.seed = ocfg.seed.wrapping_add(seed_offset);
        let report = run_checks(&run.mixture, &ocfg)?;
        write_json(&run.output("oracle.json"), &report)?;
        let failures = report.checks.failures();
        if failures.is_empty() {
            Ok(report)
        } else {
            Err(LabError::OracleFailed(failures.join(", ")))
        }
    })();
    run.finish(result.as_ref().map(|_| ()))?;
    result
}

// ---------------------------------------------------------------- interpolation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpSeed {
    pub seed: u64,
    pub params: AcceptanceParams,
    /// Latent with the highest critic logit in the pool.
    pub z1: Point,
    /// Latent with the lowest.
    pub z2: Point,
    pub trace: Vec<TracePoint>,
}

pub const INTERP_POOL: usize = 1_000;

fn interp_seed(run: &Run<'_>, t: &mut SeedTracker, models: &SeedModels) -> Result<InterpSeed, LabError> {
    let cfg = run.config;
    let seed = models.seed;
    let dir = run.seed_dir(seed);
    save_models(models, &dir, t)?;
    let gen = models.gan.generator_source();
    let critic = &models.critic_ft;
    let mut max = burn_in(&gen, critic, cfg.drs.burn_in_count, &mut substream(seed, "burnin"))?;

    let pool = gen.draw(&mut substream(seed, "interp-pool"), INTERP_POOL)?;
    let points: Vec<Point> = pool.iter().map(|p| p.1).collect();
    let logits = critic.logits(&points)?;
    for &l in &logits {
        max.observe(l);
    }
    let f0 = logits
        .iter()
        .map(|&l| f_hat(l, max.max_logit, cfg.drs.epsilon, 0.0))
        .collect::<Result<Vec<_>, _>>()?;
    let gamma = select_gamma(&f0, cfg.drs.gamma_policy)?;
    let (hi, lo) = extreme_indices(&logits);
    let params = AcceptanceParams {
        max_logit: max.max_logit,
        epsilon: cfg.drs.epsilon,
        gamma,
    };
    t.max_estimates.insert("interp".into(), max);
    let trace = interpolation_trace(&gen, critic, pool[hi].0, pool[lo].0, &default_alphas(), params)?;
    write_trace_csv(&trace, &t.output(dir.join("interp.csv")))?;
    let rec = InterpSeed {
        seed,
        params,
        z1: pool[hi].0,
        z2: pool[lo].0,
        trace,
    };
    write_json(&t.output(dir.join("interp.json")), &rec)?;
    Ok(rec)
}

/// `(argmax, argmin)`, first occurrence on ties.
fn extreme_indices(values: &[f64]) -> (usize, usize) {
    let mut hi = 0;
    let mut lo = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[hi] {
            hi = i;
        }
        if v < values[lo] {
            lo = i;
        }
    }
    (hi, lo)
}

pub fn run_interp(cfg: &ExperimentConfig, root: &Path, seed_offset: u64) -> Result<Vec<InterpSeed>, LabError> {
    run_interp_with(cfg, root, seed_offset, &mut TrainFresh)
}

pub fn run_interp_with(
    cfg: &ExperimentConfig,
    root: &Path,
    seed_offset: u64,
    provider: &mut dyn ModelProvider,
) -> Result<Vec<InterpSeed>, LabError> {
    let mut run = Run::begin(Experiment::Interp, cfg, root, seed_offset)?;
    let seeds = cfg.effective_seeds(seed_offset);
    let result = (|| {
        let per_seed = run.for_each_seed(&seeds, |run, t| {
            let models = provider.models(run.config, &run.mixture, t.seed)?;
            interp_seed(run, t, &models)
        })?;
        write_json(&run.output("interp.json"), &per_seed)?;
        Ok(per_seed)
    })();
    run.finish(result.as_ref().map(|_| ()))?;
    result
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", content = "result", rename_all = "snake_case")]
pub enum ExperimentResult {
    Table1(Table1Result),
    Ablation(AblationResult),
    Sweep(Vec<SweepPoint>),
    Oracle(OracleReport),
    Interp(Vec<InterpSeed>),
}

pub fn run_experiment(
    experiment: Experiment,
    cfg: &ExperimentConfig,
    root: &Path,
    seed_offset: u64,
) -> Result<ExperimentResult, LabError> {
    Ok(match experiment {
        Experiment::Table1 => ExperimentResult::Table1(run_table1(cfg, root, seed_offset)?),
        Experiment::Ablation => ExperimentResult::Ablation(run_ablation(cfg, root, seed_offset)?),
        Experiment::Sweep => ExperimentResult::Sweep(run_sweep(cfg, root, seed_offset)?),
        Experiment::Oracle => ExperimentResult::Oracle(run_oracle(cfg, root, seed_offset)?),
        Experiment::Interp => ExperimentResult::Interp(run_interp(cfg, root, seed_offset)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_single_seed_has_no_std() {
        let m = MeanStd::of(&[3.0]);
        assert_eq!(m.mean, 3.0);
        assert_eq!(m.std, None);
        let m = MeanStd::of(&[1.0, 3.0]);
        assert_eq!(m.std, Some(2f64.sqrt()));
    }

    #[test]
    fn extremes() {
        assert_eq!(extreme_indices(&[1.0, 5.0, -2.0, 5.0, -2.0]), (1, 2));
    }

    #[test]
    fn aggregate_header_matches_cells() {
        let r = EvalReport {
            recovered_modes: 3,
            hq_fraction: 0.5,
            hq_residual_std: 0.1,
            within_k_std: [1.0, 2.0, 3.0, 4.0],
            n_samples: 10,
        };
        let a = ArmAggregate::of(&[&r, &r], Some(&[0.2, 0.4]));
        assert_eq!(aggregate_header().len(), aggregate_cells("x", &a).len());
        let a = ArmAggregate::of(&[&r], None);
        assert_eq!(aggregate_header().len(), aggregate_cells("x", &a).len());
    }
}
