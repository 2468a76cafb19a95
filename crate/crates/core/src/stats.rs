//! Order statistics and the one-sample Kolmogorov–Smirnov test.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Nearest-rank percentile of an ascending slice: the `⌈p·n/100⌉`-th smallest
/// value, with rank clamped to at least 1 so `p = 0` gives the minimum.
pub fn nearest_rank(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::Contract("percentile of an empty set".into()));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::Config(format!("percentile {p} outside [0, 100]")));
    }
    let n = sorted.len();
    let rank = libm::ceil(p * n as f64 / 100.0) as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form converges fast for small λ.
        let pi2 = core::f64::consts::PI * core::f64::consts::PI;
        let w = -pi2 / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        for j in 1..=6 {
            let k = (2 * j - 1) as f64;
            sum += math::exp(k * k * w);
        }
        1.0 - math::sqrt(2.0 * core::f64::consts::PI) / lambda * sum
    } else {
        let mut sum = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = math::exp(-2.0 * kf * kf * lambda * lambda);
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

impl KsResult {
    /// True when the sample is consistent with the reference at level `alpha`.
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

/// Two-sided statistic `sup |F_n(x) - F(x)|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = f - i as f64 / n;
        let hi = (i + 1) as f64 / n - f;
        d = d.max(lo).max(hi);
    }
    d
}

/// Asymptotic two-sided one-sample KS test with Stephens' small-sample
/// correction of the scaling factor.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::Contract("KS test on an empty sample".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Numeric("NaN in KS sample".into()));
    }
    let statistic = ks_statistic(samples, cdf);
    let sqrt_n = math::sqrt(samples.len() as f64);
    let p_value = kolmogorov_sf((sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic);
    Ok(KsResult {
        statistic,
        p_value,
        n: samples.len(),
    })
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    math::sqrt(ss / (values.len() - 1) as f64)
}
