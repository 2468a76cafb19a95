//! Benchmark metrics: mode assignment, sample quality, acceptance-rate sweeps
//! and plot data.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::drs::{acceptance_prob, drs_sample, f_hat, Critic, DrsConfig, GammaPolicy, NetworkGenerator, SampleRecord};
use crate::error::{Error, Result};
use crate::math;
use crate::rng::substream;
use crate::target::MixtureSpec;
use crate::Point;

/// A sample counts as high quality within this many component std devs.
pub const HIGH_QUALITY_STDS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeAssignment {
    pub sample_index: usize,
    pub mode_index: usize,
    pub distance: f64,
    pub high_quality: bool,
}

/// Nearest center by Euclidean distance; ties go to the lowest mode index.
pub fn assign_modes(samples: &[Point], spec: &MixtureSpec) -> Vec<ModeAssignment> {
    let cutoff = HIGH_QUALITY_STDS * spec.sigma;
    samples
        .iter()
        .enumerate()
        .map(|(sample_index, p)| {
            let mut best = (0usize, f64::INFINITY);
            for (i, c) in spec.centers.iter().enumerate() {
                let dx = p[0] - c[0];
                let dy = p[1] - c[1];
                let d2 = dx * dx + dy * dy;
                if d2 < best.1 {
                    best = (i, d2);
                }
            }
            let distance = math::sqrt(best.1);
            ModeAssignment {
                sample_index,
                mode_index: best.0,
                distance,
                high_quality: distance <= cutoff,
            }
        })
        .collect()
}

/// Modes with at least one high-quality sample.
pub fn recovered_modes(assignments: &[ModeAssignment]) -> usize {
    let mut seen: Vec<usize> = assignments
        .iter()
        .filter(|a| a.high_quality)
        .map(|a| a.mode_index)
        .collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Pooled per-coordinate RMS of `sample - assigned center` over high-quality
/// samples; 0 when there are none.
pub fn hq_residual_std(samples: &[Point], assignments: &[ModeAssignment], spec: &MixtureSpec) -> f64 {
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for a in assignments.iter().filter(|a| a.high_quality) {
        let p = samples[a.sample_index];
        let c = spec.centers[a.mode_index];
        sum_sq += (p[0] - c[0]) * (p[0] - c[0]) + (p[1] - c[1]) * (p[1] - c[1]);
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        math::sqrt(sum_sq / (2 * count) as f64)
    }
}

/// Percent of samples within `k·σ` of their assigned center, `k = 1..=4`.
pub fn within_k_std_table(samples: &[Point], spec: &MixtureSpec) -> [f64; 4] {
    within_k_std_from(&assign_modes(samples, spec), spec)
}

fn within_k_std_from(assignments: &[ModeAssignment], spec: &MixtureSpec) -> [f64; 4] {
    let mut counts = [0usize; 4];
    for a in assignments {
        for (k, c) in counts.iter_mut().enumerate() {
            if a.distance <= (k + 1) as f64 * spec.sigma {
                *c += 1;
            }
        }
    }
    let n = assignments.len().max(1) as f64;
    counts.map(|c| 100.0 * c as f64 / n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub recovered_modes: usize,
    pub hq_fraction: f64,
    pub hq_residual_std: f64,
    pub within_k_std: [f64; 4],
    pub n_samples: usize,
}

pub fn evaluate(samples: &[Point], spec: &MixtureSpec) -> EvalReport {
    let assignments = assign_modes(samples, spec);
    let within_k_std = within_k_std_from(&assignments, spec);
    let hq = assignments.iter().filter(|a| a.high_quality).count();
    EvalReport {
        recovered_modes: recovered_modes(&assignments),
        hq_fraction: hq as f64 / samples.len().max(1) as f64,
        hq_residual_std: hq_residual_std(samples, &assignments, spec),
        within_k_std,
        n_samples: samples.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub percentile: f64,
    pub seed: u64,
    pub acceptance_rate: f64,
    pub hq_fraction: f64,
    pub accepted: usize,
    pub draws: usize,
}

/// Runs DRS once per percentile, each on its own substream of `seed`, and
/// reports realized acceptance rate against high-quality fraction.
pub fn acceptance_rate_sweep<C>(
    generator: &NetworkGenerator<'_>,
    critic: &C,
    spec: &MixtureSpec,
    percentiles: &[f64],
    config: &DrsConfig,
    seed: u64,
) -> Result<Vec<SweepPoint>>
where
    C: Critic<Point> + ?Sized,
{
    percentiles
        .iter()
        .map(|&p| {
            let cfg = DrsConfig {
                gamma_policy: GammaPolicy::Percentile { p },
                ..*config
            };
            let mut rng = substream(seed, &format!("sweep-{p}"));
            let out = drs_sample(generator, critic, &cfg, &mut rng)?;
            let points: Vec<Point> = out.accepted.iter().map(|r| r.point).collect();
            Ok(SweepPoint {
                percentile: p,
                seed,
                acceptance_rate: out.acceptance_rate(),
                hq_fraction: evaluate(&points, spec).hq_fraction,
                accepted: out.accepted.len(),
                draws: out.all.len(),
            })
        })
        .collect()
}

/// `(acceptance_prob, residual_distance)` per record, in record order.
pub fn acceptance_vs_quality_scatter(
    records: &[SampleRecord<Point>],
    assignments: &[ModeAssignment],
) -> Result<Vec<(f64, f64)>> {
    if records.len() != assignments.len() {
        return Err(Error::Contract(format!(
            "{} records but {} assignments",
            records.len(),
            assignments.len()
        )));
    }
    Ok(records
        .iter()
        .zip(assignments)
        .map(|(r, a)| (r.acceptance_prob, a.distance))
        .collect())
}

/// Acceptance parameters frozen at the end of a DRS run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceParams {
    pub max_logit: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub alpha: f64,
    pub latent: Point,
    pub point: Point,
    pub logit: f64,
    pub acceptance_prob: f64,
}

/// `α ∈ {0, 0.1, …, 1}`.
pub fn default_alphas() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// Generator output and acceptance probability along `z = α z₁ + (1-α) z₂`.
/// The maximum is raised to cover any logit on the path.
pub fn interpolation_trace<C>(
    generator: &NetworkGenerator<'_>,
    critic: &C,
    z1: Point,
    z2: Point,
    alphas: &[f64],
    params: AcceptanceParams,
) -> Result<Vec<TracePoint>>
where
    C: Critic<Point> + ?Sized,
{
    let latents: Vec<Point> = alphas
        .iter()
        .map(|&a| {
            if a == 1.0 {
                z1
            } else if a == 0.0 {
                z2
            } else {
                [a * z1[0] + (1.0 - a) * z2[0], a * z1[1] + (1.0 - a) * z2[1]]
            }
        })
        .collect();
    let points = generator.generate(&latents)?;
    let logits = critic.logits(&points)?;
    let max_logit = logits.iter().copied().fold(params.max_logit, f64::max);
    alphas
        .iter()
        .zip(latents)
        .zip(points)
        .zip(logits)
        .map(|(((&alpha, latent), point), logit)| {
            let f = f_hat(logit, max_logit, params.epsilon, params.gamma)?;
            Ok(TracePoint {
                alpha,
                latent,
                point,
                logit,
                acceptance_prob: acceptance_prob(f),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// `counts[i]` covers `[edges[i], edges[i+1])`; the last bin is closed.
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

pub fn histogram(values: &[f64], edges: &[f64]) -> Result<Histogram> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("histogram edges must be strictly increasing, at least two".into()));
    }
    let bins = edges.len() - 1;
    let mut h = Histogram {
        edges: edges.to_vec(),
        counts: alloc::vec![0; bins],
        underflow: 0,
        overflow: 0,
    };
    let (lo, hi) = (edges[0], edges[bins]);
    for &v in values {
        if v < lo || v.is_nan() {
            h.underflow += 1;
        } else if v > hi {
            h.overflow += 1;
        } else {
            // First edge strictly greater than v, minus one.
            let idx = edges.partition_point(|&e| e <= v).saturating_sub(1).min(bins - 1);
            h.counts[idx] += 1;
        }
    }
    Ok(h)
}

/// `n + 1` evenly spaced edges over `[lo, hi]`.
pub fn linear_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect()
}
