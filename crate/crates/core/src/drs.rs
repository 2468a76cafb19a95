//! Discriminator rejection sampling.
//!
//! A critic's logit `D̃(x)` estimates `log(p_d(x)/p_g(x))`. Given the running
//! maximum logit `D̃_M`, the ideal acceptance probability `e^{D̃(x) - D̃_M}` is
//! rewritten as `σ(F(x))` with
//!
//! ```text
//! F̂(x) = D̃(x) - D̃_M - log(1 - e^{D̃(x) - D̃_M - ε}) - γ
//! ```
//!
//! so that a shift `γ` can raise or lower the overall acceptance rate while
//! preserving the ranking of samples. The maximum is tracked in logit space,
//! which is order-isomorphic to tracking the ratio `e^{D̃}` and cannot
//! overflow.
//!
//! Also here: exact rejection sampling with a known envelope, and the
//! hard-threshold baselines used for comparison.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::nn::{Matrix, Network};
use crate::stats::nearest_rank;
use crate::target::PriorSpec;
use crate::Point;

/// Scores points with a pre-sigmoid logit.
pub trait Critic<P> {
    fn logits(&self, points: &[P]) -> Result<Vec<f64>>;
}

/// Anything that can propose `(latent, point)` pairs.
pub trait SampleSource {
    type Point: Copy;

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<(Self::Point, Self::Point)>>;
}

/// Wraps a pointwise closure as a [`Critic`].
pub struct FnCritic<F>(pub F);

impl<P, F: Fn(&P) -> f64> Critic<P> for FnCritic<F> {
    fn logits(&self, points: &[P]) -> Result<Vec<f64>> {
        Ok(points.iter().map(&self.0).collect())
    }
}

impl<P, C: Critic<P> + ?Sized> Critic<P> for &C {
    fn logits(&self, points: &[P]) -> Result<Vec<f64>> {
        (**self).logits(points)
    }
}

/// A scalar-output discriminator network is a critic over 2D points.
impl Critic<Point> for Network {
    fn logits(&self, points: &[Point]) -> Result<Vec<f64>> {
        if self.output_dim() != 1 {
            return Err(Error::Contract(format!(
                "critic network must have one output, has {}",
                self.output_dim()
            )));
        }
        Ok(self.predict(&Matrix::from_points(points))?.data)
    }
}

/// Generator network fed by a Gaussian prior.
#[derive(Debug, Clone, Copy)]
pub struct NetworkGenerator<'a> {
    pub net: &'a Network,
    pub prior: PriorSpec,
}

impl<'a> NetworkGenerator<'a> {
    pub fn new(net: &'a Network) -> Self {
        Self {
            net,
            prior: PriorSpec::default(),
        }
    }

    pub fn generate(&self, latents: &[Point]) -> Result<Vec<Point>> {
        Ok(self.net.predict(&Matrix::from_points(latents))?.to_points())
    }
}

impl SampleSource for NetworkGenerator<'_> {
    type Point = Point;

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<(Point, Point)>> {
        let latents = self.prior.sample_n(rng, n);
        let points = self.generate(&latents)?;
        Ok(latents.into_iter().zip(points).collect())
    }
}

/// Linear "generator" `x = scale · z`: its density is known in closed form,
/// which makes it a proposal for analytic oracle checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledGaussian {
    pub scale: f64,
}

impl ScaledGaussian {
    pub fn log_density(&self, x: Point) -> f64 {
        PriorSpec { std: self.scale }.log_density(x)
    }
}

impl SampleSource for ScaledGaussian {
    type Point = Point;

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<(Point, Point)>> {
        Ok(PriorSpec::default()
            .sample_n(rng, n)
            .into_iter()
            .map(|z| (z, [z[0] * self.scale, z[1] * self.scale]))
            .collect())
    }
}

/// Uniform proposal on `[low, high)` in one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform1d {
    pub low: f64,
    pub high: f64,
}

impl Uniform1d {
    pub fn density(&self, x: f64) -> f64 {
        if x >= self.low && x < self.high {
            1.0 / (self.high - self.low)
        } else {
            0.0
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.low + (self.high - self.low) * rng.random::<f64>()
    }
}

impl SampleSource for Uniform1d {
    type Point = f64;

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<(f64, f64)>> {
        Ok((0..n)
            .map(|_| {
                let x = self.sample(rng);
                (x, x)
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaPolicy {
    Fixed { gamma: f64 },
    /// Nearest-rank percentile `p ∈ [0, 100]` of the batch's `F̂` (with γ = 0).
    Percentile { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DrsConfig {
    pub epsilon: f64,
    pub gamma_policy: GammaPolicy,
    pub burn_in_count: usize,
    pub target_count: usize,
    pub batch_size: usize,
    /// Stop after this many proposals even if the target was not reached.
    pub max_draws: Option<usize>,
    /// Abort when the acceptance rate over a window falls below this; 0 disables.
    pub min_acceptance_rate: f64,
    pub rate_window: usize,
}

impl Default for DrsConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            gamma_policy: GammaPolicy::Percentile { p: 95.0 },
            burn_in_count: 10_000,
            target_count: 10_000,
            batch_size: 1_000,
            max_draws: None,
            min_acceptance_rate: 1e-4,
            rate_window: 100_000,
        }
    }
}

impl DrsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        match self.gamma_policy {
            GammaPolicy::Percentile { p } if !(0.0..=100.0).contains(&p) => {
                return Err(Error::Config(format!("gamma percentile {p} outside [0, 100]")));
            }
            GammaPolicy::Fixed { gamma } if gamma.is_nan() => {
                return Err(Error::Config("fixed gamma is NaN".into()));
            }
            _ => {}
        }
        if self.burn_in_count == 0 || self.target_count == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "burn_in_count, target_count and batch_size must be positive".into(),
            ));
        }
        if self.min_acceptance_rate > 0.0 && self.rate_window == 0 {
            return Err(Error::Config("rate_window must be positive when a floor is set".into()));
        }
        Ok(())
    }
}

/// Running estimate of the maximum critic logit `D̃_M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxEstimate {
    pub max_logit: f64,
    /// Times the maximum was raised after burn-in.
    pub update_count: u64,
}

impl MaxEstimate {
    pub fn new(max_logit: f64) -> Self {
        Self {
            max_logit,
            update_count: 0,
        }
    }

    /// Raises the maximum if `logit` exceeds it; returns whether it did.
    pub fn observe(&mut self, logit: f64) -> bool {
        if logit > self.max_logit {
            self.max_logit = logit;
            self.update_count += 1;
            true
        } else {
            false
        }
    }

    /// Combines estimates from independent workers.
    pub fn merge(self, other: MaxEstimate) -> MaxEstimate {
        MaxEstimate {
            max_logit: self.max_logit.max(other.max_logit),
            update_count: self.update_count + other.update_count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord<P> {
    pub point: P,
    pub latent: P,
    pub logit: f64,
    /// `F̂(x)` including γ; `acceptance_prob = σ(f_value)`.
    pub f_value: f64,
    pub acceptance_prob: f64,
    pub psi: f64,
    pub accepted: bool,
    pub batch_index: usize,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrsOutcome<P> {
    pub accepted: Vec<SampleRecord<P>>,
    pub all: Vec<SampleRecord<P>>,
    pub max_estimate: MaxEstimate,
    /// Max logit after burn-in, before the sampling phase.
    pub burn_in_max: f64,
}

impl<P> DrsOutcome<P> {
    pub fn acceptance_rate(&self) -> f64 {
        if self.all.is_empty() {
            0.0
        } else {
            self.accepted.len() as f64 / self.all.len() as f64
        }
    }
}

/// `p_d/p_g = e^{logit}` with an overflow flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRatio {
    pub value: f64,
    pub saturated: bool,
}

pub fn density_ratio(logit: f64) -> DensityRatio {
    let value = math::exp(logit);
    if value.is_finite() {
        DensityRatio {
            value,
            saturated: false,
        }
    } else {
        DensityRatio {
            value: f64::MAX,
            saturated: true,
        }
    }
}

/// `F̂ = d - d_M - log(1 - e^{d - d_M - ε}) - γ`.
pub fn f_hat(logit: f64, max_logit: f64, epsilon: f64, gamma: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::Contract(format!("epsilon must be positive, got {epsilon}")));
    }
    if !logit.is_finite() || !max_logit.is_finite() {
        return Err(Error::Numeric(format!("non-finite logit {logit} or max {max_logit}")));
    }
    if logit > max_logit {
        return Err(Error::Contract(format!(
            "logit {logit} exceeds the current maximum {max_logit}; raise the maximum first"
        )));
    }
    let delta = logit - max_logit;
    Ok(delta - math::log1m_exp(delta - epsilon) - gamma)
}

/// `σ(f)`.
#[inline]
pub fn acceptance_prob(f: f64) -> f64 {
    math::sigmoid(f)
}

/// γ for one batch, given that batch's `F̂` values computed with γ = 0.
pub fn select_gamma(f_values: &[f64], policy: GammaPolicy) -> Result<f64> {
    match policy {
        GammaPolicy::Fixed { gamma } => Ok(gamma),
        GammaPolicy::Percentile { p } => {
            if f_values.is_empty() {
                return Err(Error::Contract("percentile gamma on an empty batch".into()));
            }
            let mut sorted = f_values.to_vec();
            sorted.sort_by(f64::total_cmp);
            nearest_rank(&sorted, p)
        }
    }
}

/// Maximum critic logit over `n` fresh proposals.
pub fn burn_in<S, C, R>(source: &S, critic: &C, n: usize, rng: &mut R) -> Result<MaxEstimate>
where
    S: SampleSource,
    C: Critic<S::Point> + ?Sized,
    R: Rng + ?Sized,
{
    if n == 0 {
        return Err(Error::Config("burn-in needs at least one sample".into()));
    }
    let points: Vec<S::Point> = source.draw(rng, n)?.into_iter().map(|(_, x)| x).collect();
    let logits = critic.logits(&points)?;
    let mut max = f64::NEG_INFINITY;
    for l in logits {
        if !l.is_finite() {
            return Err(Error::Numeric(format!("critic produced {l} during burn-in")));
        }
        max = max.max(l);
    }
    Ok(MaxEstimate::new(max))
}

/// Full DRS: burn-in followed by the sampling loop, both on `rng`.
pub fn drs_sample<S, C, R>(source: &S, critic: &C, config: &DrsConfig, rng: &mut R) -> Result<DrsOutcome<S::Point>>
where
    S: SampleSource,
    C: Critic<S::Point> + ?Sized,
    R: Rng + ?Sized,
{
    config.validate()?;
    let estimate = burn_in(source, critic, config.burn_in_count, rng)?;
    drs_sample_from(source, critic, config, estimate, rng)
}

/// The DRS sampling loop starting from an existing max estimate.
///
/// Each batch first raises the maximum with any larger logit it contains, then
/// computes `F̂`, then γ (per policy) and the acceptance decisions. Decisions
/// made before a later max update are not revisited.
pub fn drs_sample_from<S, C, R>(
    source: &S,
    critic: &C,
    config: &DrsConfig,
    initial: MaxEstimate,
    rng: &mut R,
) -> Result<DrsOutcome<S::Point>>
where
    S: SampleSource,
    C: Critic<S::Point> + ?Sized,
    R: Rng + ?Sized,
{
    config.validate()?;
    let mut estimate = initial;
    let mut accepted = Vec::with_capacity(config.target_count);
    let mut all = Vec::new();
    let mut window_draws = 0usize;
    let mut window_accepts = 0usize;
    let mut batch_index = 0usize;
    let mut f0 = Vec::with_capacity(config.batch_size);

    'outer: while accepted.len() < config.target_count {
        let mut n = config.batch_size;
        if let Some(limit) = config.max_draws {
            if all.len() >= limit {
                break;
            }
            n = n.min(limit - all.len());
        }
        let pairs = source.draw(rng, n)?;
        let points: Vec<S::Point> = pairs.iter().map(|&(_, x)| x).collect();
        let logits = critic.logits(&points)?;
        if let Some(bad) = logits.iter().find(|l| !l.is_finite()) {
            return Err(Error::Numeric(format!("critic produced {bad} in batch {batch_index}")));
        }
        for &l in &logits {
            estimate.observe(l);
        }
        f0.clear();
        for &l in &logits {
            f0.push(f_hat(l, estimate.max_logit, config.epsilon, 0.0)?);
        }
        let gamma = select_gamma(&f0, config.gamma_policy)?;
        for (i, &(latent, point)) in pairs.iter().enumerate() {
            let f_value = f0[i] - gamma;
            let p = acceptance_prob(f_value);
            let psi: f64 = rng.random();
            let record = SampleRecord {
                point,
                latent,
                logit: logits[i],
                f_value,
                acceptance_prob: p,
                psi,
                accepted: psi <= p,
                batch_index,
                gamma,
            };
            all.push(record);
            window_draws += 1;
            if record.accepted {
                accepted.push(record);
                window_accepts += 1;
                if accepted.len() >= config.target_count {
                    break 'outer;
                }
            }
        }
        if config.min_acceptance_rate > 0.0 && window_draws >= config.rate_window {
            let rate = window_accepts as f64 / window_draws as f64;
            if rate < config.min_acceptance_rate {
                return Err(Error::AcceptanceFloor {
                    rate,
                    floor: config.min_acceptance_rate,
                    window: window_draws,
                    draws: all.len(),
                });
            }
            window_draws = 0;
            window_accepts = 0;
        }
        batch_index += 1;
    }

    Ok(DrsOutcome {
        accepted,
        all,
        max_estimate: estimate,
        burn_in_max: initial.max_logit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RejectionRecord<P> {
    pub point: P,
    pub acceptance_prob: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionOutcome<P> {
    pub samples: Vec<P>,
    pub records: Vec<RejectionRecord<P>>,
}

impl<P> RejectionOutcome<P> {
    pub fn acceptance_rate(&self) -> f64 {
        self.samples.len() as f64 / self.records.len().max(1) as f64
    }
}

/// Classic accept/reject: keep `x ~ proposal` with probability
/// `p_d(x) / (M p_g(x))` until `n` samples are kept.
pub fn exact_rejection_sample<P, S, Fg, Fd, R>(
    mut sample: S,
    proposal_density: Fg,
    target_density: Fd,
    envelope: f64,
    n: usize,
    rng: &mut R,
) -> Result<RejectionOutcome<P>>
where
    P: Copy,
    S: FnMut(&mut R) -> P,
    Fg: Fn(&P) -> f64,
    Fd: Fn(&P) -> f64,
    R: Rng + ?Sized,
{
    if !(envelope > 0.0 && envelope.is_finite()) {
        return Err(Error::Config(format!("envelope constant must be positive, got {envelope}")));
    }
    let log_m = math::ln(envelope);
    rejection_sample_log(
        &mut sample,
        |x: &P| math::ln(target_density(x)) - log_m - math::ln(proposal_density(x)),
        n,
        rng,
    )
}

/// Accept/reject with the log acceptance probability supplied directly;
/// useful when the densities themselves underflow.
pub fn rejection_sample_log<P, S, F, R>(sample: &mut S, log_accept: F, n: usize, rng: &mut R) -> Result<RejectionOutcome<P>>
where
    P: Copy,
    S: FnMut(&mut R) -> P,
    F: Fn(&P) -> f64,
    R: Rng + ?Sized,
{
    let mut samples = Vec::with_capacity(n);
    let mut records = Vec::new();
    while samples.len() < n {
        let x = sample(rng);
        let log_p = log_accept(&x);
        if log_p.is_nan() || log_p > 0.0 {
            return Err(Error::EnvelopeViolation {
                index: records.len(),
                ratio: math::exp(log_p),
            });
        }
        let p = math::exp(log_p);
        let psi: f64 = rng.random();
        let accepted = psi < p;
        records.push(RejectionRecord {
            point: x,
            acceptance_prob: p,
            accepted,
        });
        if accepted {
            samples.push(x);
        }
    }
    Ok(RejectionOutcome { samples, records })
}

/// Keeps records whose logit is at least `threshold`.
pub fn hard_threshold_filter<P: Copy>(records: &[SampleRecord<P>], threshold: f64) -> Vec<SampleRecord<P>> {
    records.iter().filter(|r| r.logit >= threshold).copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub achieved_rate: f64,
    pub kept: usize,
}

/// The threshold whose keep-rate on `logits` is closest to `target_rate`:
/// the `k`-th largest logit with `k = round(rate · n)` (at least 1).
pub fn threshold_for_rate(logits: &[f64], target_rate: f64) -> Result<ThresholdChoice> {
    if logits.is_empty() {
        return Err(Error::Contract("threshold_for_rate on an empty logit set".into()));
    }
    if !(target_rate > 0.0 && target_rate <= 1.0) {
        return Err(Error::Config(format!("target rate {target_rate} outside (0, 1]")));
    }
    let mut sorted = logits.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let n = sorted.len();
    let k = (libm::round(target_rate * n as f64) as usize).clamp(1, n);
    let threshold = sorted[k - 1];
    let kept = sorted.iter().filter(|&&l| l >= threshold).count();
    Ok(ThresholdChoice {
        threshold,
        achieved_rate: kept as f64 / n as f64,
        kept,
    })
}
