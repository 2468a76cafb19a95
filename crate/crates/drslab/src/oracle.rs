//! Analytic checks where the true density ratio is known: a uniform proposal
//! for a standard normal target in 1D, and a wide Gaussian proposal for the
//! 2D mixture.

use drs_core::drs::{
    drs_sample_from, exact_rejection_sample, rejection_sample_log, DrsConfig, FnCritic, GammaPolicy, MaxEstimate, ScaledGaussian,
    Uniform1d,
};
use drs_core::math::{ln, normal_cdf, normal_pdf};
use drs_core::rng::substream;
use drs_core::stats::{ks_test, KsResult};
use drs_core::target::MixtureSpec;
use drs_core::Point;
use serde::{Deserialize, Serialize};

use crate::config::OracleConfig;
use crate::error::LabError;
use crate::sampling::threshold_sample;

/// Relative slack on analytic envelope constants so rounding never pushes a
/// ratio above one.
const ENVELOPE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsSummary {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub passes: bool,
}

impl KsSummary {
    fn new(r: KsResult, alpha: f64) -> Self {
        Self {
            statistic: r.statistic,
            p_value: r.p_value,
            n: r.n,
            passes: r.passes(alpha),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneDimReport {
    pub envelope: f64,
    pub expected_rate: f64,
    pub exact_rate: f64,
    pub exact_ks: KsSummary,
    pub threshold: f64,
    pub threshold_rate: f64,
    pub threshold_ks: KsSummary,
    pub drs_rate: f64,
    pub drs_ks: KsSummary,
    /// Largest `|p_drs(x) - p_exact(x)|` over every DRS proposal.
    pub drs_max_prob_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoDimReport {
    pub log_envelope: f64,
    pub exact_rate: f64,
    /// KS on the x and y marginals.
    pub exact_ks: [KsSummary; 2],
    pub threshold_rate: f64,
    pub threshold_ks: [KsSummary; 2],
    pub drs_rate: f64,
    pub drs_ks: [KsSummary; 2],
    pub drs_max_prob_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleChecks {
    pub exact_rs_ks_1d: bool,
    pub exact_rs_rate_1d: bool,
    pub threshold_ks_fails_1d: bool,
    pub drs_matches_exact_1d: bool,
    pub drs_ks_1d: bool,
    pub exact_rs_ks_2d: bool,
    pub threshold_ks_fails_2d: bool,
    pub drs_matches_exact_2d: bool,
    pub drs_ks_2d: bool,
}

impl OracleChecks {
    pub fn failures(&self) -> Vec<&'static str> {
        let all = [
            ("exact_rs_ks_1d", self.exact_rs_ks_1d),
            ("exact_rs_rate_1d", self.exact_rs_rate_1d),
            ("threshold_ks_fails_1d", self.threshold_ks_fails_1d),
            ("drs_matches_exact_1d", self.drs_matches_exact_1d),
            ("drs_ks_1d", self.drs_ks_1d),
            ("exact_rs_ks_2d", self.exact_rs_ks_2d),
            ("threshold_ks_fails_2d", self.threshold_ks_fails_2d),
            ("drs_matches_exact_2d", self.drs_matches_exact_2d),
            ("drs_ks_2d", self.drs_ks_2d),
        ];
        all.into_iter().filter(|(_, ok)| !ok).map(|(n, _)| n).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub alpha: f64,
    pub one_dim: OneDimReport,
    pub two_dim: TwoDimReport,
    pub checks: OracleChecks,
    pub passed: bool,
}

pub const RATE_TOLERANCE: f64 = 0.01;
pub const PROB_TOLERANCE: f64 = 1e-6;

/// DRS settings that make it coincide with exact rejection sampling when the
/// critic is the true log density ratio and the max is exact.
pub fn oracle_drs_config(target: usize) -> DrsConfig {
    DrsConfig {
        epsilon: 1e-12,
        gamma_policy: GammaPolicy::Fixed { gamma: 0.0 },
        target_count: target,
        min_acceptance_rate: 0.0,
        ..DrsConfig::default()
    }
}

/// Uniform `[-w, w]` proposal, standard normal target.
pub fn one_dim(cfg: &OracleConfig) -> Result<OneDimReport, LabError> {
    let w = cfg.half_width;
    let proposal = Uniform1d { low: -w, high: w };
    let g = 1.0 / (2.0 * w);
    let envelope = normal_pdf(0.0) / g * (1.0 + ENVELOPE_SLACK);
    let n = cfg.samples;

    let exact = exact_rejection_sample(
        |r: &mut _| proposal.sample(r),
        |x: &f64| proposal.density(*x),
        |x: &f64| normal_pdf(*x),
        envelope,
        n,
        &mut substream(cfg.seed, "oracle-1d-exact"),
    )?;
    let exact_ks = KsSummary::new(ks_test(&exact.samples, normal_cdf)?, cfg.alpha);

    let critic = FnCritic(|x: &f64| ln(normal_pdf(*x)) - ln(g));
    let thr = threshold_sample(
        &proposal,
        &critic,
        exact.acceptance_rate(),
        n,
        &mut substream(cfg.seed, "oracle-1d-threshold"),
    )?;
    let threshold_ks = KsSummary::new(ks_test(&thr.points, normal_cdf)?, cfg.alpha);

    let drs = drs_sample_from(
        &proposal,
        &critic,
        &oracle_drs_config(n),
        MaxEstimate::new(ln(envelope)),
        &mut substream(cfg.seed, "oracle-1d-drs"),
    )?;
    let accepted: Vec<f64> = drs.accepted.iter().map(|r| r.point).collect();
    let drs_ks = KsSummary::new(ks_test(&accepted, normal_cdf)?, cfg.alpha);
    let drs_max_prob_error = drs
        .all
        .iter()
        .map(|r| (r.acceptance_prob - normal_pdf(r.point) / (envelope * g)).abs())
        .fold(0.0, f64::max);

    Ok(OneDimReport {
        envelope,
        expected_rate: 1.0 / envelope,
        exact_rate: exact.acceptance_rate(),
        exact_ks,
        threshold: thr.threshold,
        threshold_rate: thr.realized_rate,
        threshold_ks,
        drs_rate: drs.acceptance_rate(),
        drs_ks,
        drs_max_prob_error,
    })
}

/// CDF of one coordinate's marginal under the mixture.
fn marginal_cdf(spec: &MixtureSpec, axis: usize) -> impl Fn(f64) -> f64 + '_ {
    move |x| {
        spec.centers
            .iter()
            .zip(&spec.weights)
            .map(|(c, w)| w * normal_cdf((x - c[axis]) / spec.sigma))
            .sum()
    }
}

fn marginal_ks(points: &[Point], spec: &MixtureSpec, alpha: f64) -> Result<[KsSummary; 2], LabError> {
    let mut out = [None, None];
    for (axis, slot) in out.iter_mut().enumerate() {
        let xs: Vec<f64> = points.iter().map(|p| p[axis]).collect();
        *slot = Some(KsSummary::new(ks_test(&xs, marginal_cdf(spec, axis))?, alpha));
    }
    Ok([out[0].unwrap(), out[1].unwrap()])
}

/// `max_x log p_d(x) - log p_g(x)` for a Gaussian proposal of std `s > σ`.
/// Each component's ratio peaks at `c s² / (s² - σ²)`; the mixture's other
/// components add a vanishing amount there for well separated grids.
pub fn log_envelope_2d(spec: &MixtureSpec, proposal: &ScaledGaussian) -> f64 {
    let s2 = proposal.scale * proposal.scale;
    let shrink = s2 / (s2 - spec.sigma * spec.sigma);
    spec.centers
        .iter()
        .map(|c| {
            let x = [c[0] * shrink, c[1] * shrink];
            spec.log_density(x) - proposal.log_density(x)
        })
        .fold(f64::NEG_INFINITY, f64::max)
        + 1e-9
}

pub fn two_dim(spec: &MixtureSpec, cfg: &OracleConfig) -> Result<TwoDimReport, LabError> {
    if cfg.proposal_scale <= spec.sigma {
        return Err(LabError::Config("oracle proposal scale must exceed the mixture sigma".into()));
    }
    let proposal = ScaledGaussian {
        scale: cfg.proposal_scale,
    };
    let log_m = log_envelope_2d(spec, &proposal);
    let log_ratio = |x: &Point| spec.log_density(*x) - proposal.log_density(*x);
    let n = cfg.samples;
    let prior = drs_core::target::PriorSpec::default();

    let mut draw = |r: &mut drs_core::rng::StreamRng| {
        let z = prior.sample(r);
        [z[0] * proposal.scale, z[1] * proposal.scale]
    };
    let exact = rejection_sample_log(
        &mut draw,
        |x: &Point| log_ratio(x) - log_m,
        n,
        &mut substream(cfg.seed, "oracle-2d-exact"),
    )?;
    let exact_ks = marginal_ks(&exact.samples, spec, cfg.alpha)?;

    let critic = FnCritic(log_ratio);
    let thr = threshold_sample(
        &proposal,
        &critic,
        exact.acceptance_rate(),
        n,
        &mut substream(cfg.seed, "oracle-2d-threshold"),
    )?;
    let threshold_ks = marginal_ks(&thr.points, spec, cfg.alpha)?;

    let drs = drs_sample_from(
        &proposal,
        &critic,
        &oracle_drs_config(n),
        MaxEstimate::new(log_m),
        &mut substream(cfg.seed, "oracle-2d-drs"),
    )?;
    let accepted: Vec<Point> = drs.accepted.iter().map(|r| r.point).collect();
    let drs_ks = marginal_ks(&accepted, spec, cfg.alpha)?;
    let drs_max_prob_error = drs
        .all
        .iter()
        .map(|r| (r.acceptance_prob - (log_ratio(&r.point) - log_m).exp()).abs())
        .fold(0.0, f64::max);

    Ok(TwoDimReport {
        log_envelope: log_m,
        exact_rate: exact.acceptance_rate(),
        exact_ks,
        threshold_rate: thr.realized_rate,
        threshold_ks,
        drs_rate: drs.acceptance_rate(),
        drs_ks,
        drs_max_prob_error,
    })
}

pub fn run_checks(spec: &MixtureSpec, cfg: &OracleConfig) -> Result<OracleReport, LabError> {
    let one = one_dim(cfg)?;
    let two = two_dim(spec, cfg)?;
    let both = |k: &[KsSummary; 2]| k[0].passes && k[1].passes;
    let checks = OracleChecks {
        exact_rs_ks_1d: one.exact_ks.passes,
        exact_rs_rate_1d: (one.exact_rate - one.expected_rate).abs() <= RATE_TOLERANCE,
        threshold_ks_fails_1d: !one.threshold_ks.passes,
        drs_matches_exact_1d: one.drs_max_prob_error <= PROB_TOLERANCE,
        drs_ks_1d: one.drs_ks.passes,
        exact_rs_ks_2d: both(&two.exact_ks),
        threshold_ks_fails_2d: !both(&two.threshold_ks),
        drs_matches_exact_2d: two.drs_max_prob_error <= PROB_TOLERANCE,
        drs_ks_2d: both(&two.drs_ks),
    };
    let passed = checks.failures().is_empty();
    Ok(OracleReport {
        alpha: cfg.alpha,
        one_dim: one,
        two_dim: two,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_2d_dominates_sampled_ratios() {
        let spec = drs_core::target::benchmark_mixture();
        let prop = ScaledGaussian { scale: 3.0 };
        let log_m = log_envelope_2d(&spec, &prop);
        let mut rng = substream(3, "t");
        for c in &spec.centers {
            for _ in 0..200 {
                let z = drs_core::target::PriorSpec { std: 0.2 }.sample(&mut rng);
                let x = [c[0] + z[0], c[1] + z[1]];
                assert!(spec.log_density(x) - prop.log_density(x) <= log_m);
            }
        }
    }

    #[test]
    fn marginal_cdf_limits() {
        let spec = drs_core::target::benchmark_mixture();
        let f = marginal_cdf(&spec, 0);
        assert!(f(-10.0) < 1e-12);
        assert!((f(10.0) - 1.0).abs() < 1e-12);
        assert!((f(0.0) - 0.5).abs() < 1e-12);
    }
}
