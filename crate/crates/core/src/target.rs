//! The Gaussian-grid target, the latent prior, and the analytic optimal
//! discriminator.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::Point;

/// Mixture of isotropic 2D Gaussians sharing one standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub centers: Vec<Point>,
    pub sigma: f64,
    pub weights: Vec<f64>,
}

impl MixtureSpec {
    pub fn new(centers: Vec<Point>, sigma: f64, weights: Vec<f64>) -> Result<Self> {
        let spec = Self {
            centers,
            sigma,
            weights,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.centers.is_empty() || self.centers.len() != self.weights.len() {
            return Err(Error::Config(format!(
                "{} centers but {} weights",
                self.centers.len(),
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::Config("mixture weights must be non-negative".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("mixture weights sum to {total}, not 1")));
        }
        for (i, a) in self.centers.iter().enumerate() {
            if !(a[0].is_finite() && a[1].is_finite()) {
                return Err(Error::Config(format!("center {i} is not finite")));
            }
            if self.centers[..i].iter().any(|b| b == a) {
                return Err(Error::Config(format!("center {i} duplicates an earlier center")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// `log p_d(x)`, via log-sum-exp over components.
    pub fn log_density(&self, point: Point) -> f64 {
        let var = self.sigma * self.sigma;
        let log_norm = -math::ln(2.0 * core::f64::consts::PI * var);
        let terms: Vec<f64> = self
            .centers
            .iter()
            .zip(&self.weights)
            .map(|(c, &w)| {
                let dx = point[0] - c[0];
                let dy = point[1] - c[1];
                math::ln(w) + log_norm - (dx * dx + dy * dy) / (2.0 * var)
            })
            .collect();
        math::log_sum_exp(&terms)
    }

    /// `p_d(x)`; underflows to exactly 0 far from every component.
    pub fn density(&self, point: Point) -> f64 {
        math::exp(self.log_density(point))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut component = self.weights.len() - 1;
        for (i, &w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                component = i;
                break;
            }
        }
        let c = self.centers[component];
        let zx: f64 = StandardNormal.sample(rng);
        let zy: f64 = StandardNormal.sample(rng);
        [c[0] + self.sigma * zx, c[1] + self.sigma * zy]
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<Point> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// `rows × cols` components on a regular grid centred at the origin, with
/// uniform weights. Centers are listed row-major.
pub fn make_grid_mixture(rows: usize, cols: usize, spacing: f64, sigma: f64) -> Result<MixtureSpec> {
    if rows == 0 || cols == 0 {
        return Err(Error::Config("grid needs at least one row and column".into()));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::Config(format!("grid spacing must be positive, got {spacing}")));
    }
    let x0 = -(cols as f64 - 1.0) * spacing / 2.0;
    let y0 = -(rows as f64 - 1.0) * spacing / 2.0;
    let mut centers = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            centers.push([x0 + c as f64 * spacing, y0 + r as f64 * spacing]);
        }
    }
    let n = rows * cols;
    MixtureSpec::new(centers, sigma, alloc::vec![1.0 / n as f64; n])
}

/// The benchmark target: a 5×5 grid with spacing 2 and σ = 0.05.
pub fn benchmark_mixture() -> MixtureSpec {
    make_grid_mixture(5, 5, 2.0, 0.05).expect("benchmark grid is valid")
}

/// Isotropic Gaussian prior over the 2D latent space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub std: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self { std: 1.0 }
    }
}

impl PriorSpec {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        [a * self.std, b * self.std]
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<Point> {
        (0..n).map(|_| self.sample(rng)).collect()
    }

    pub fn log_density(&self, z: Point) -> f64 {
        let var = self.std * self.std;
        -math::ln(2.0 * core::f64::consts::PI * var) - (z[0] * z[0] + z[1] * z[1]) / (2.0 * var)
    }
}

/// Standard-normal latent draw.
pub fn prior_sample<R: Rng + ?Sized>(rng: &mut R) -> Point {
    PriorSpec::default().sample(rng)
}

/// Logit of the optimal discriminator, `log(p_d(x) / p_g(x))`.
pub fn optimal_logit<P, Fd, Fg>(p_d: Fd, p_g: Fg, point: &P) -> Result<f64>
where
    Fd: Fn(&P) -> f64,
    Fg: Fn(&P) -> f64,
{
    let d = p_d(point);
    let g = p_g(point);
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::Domain(format!("generator density is {g} at the query point")));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!("data density is {d} at the query point")));
    }
    Ok(math::ln(d) - math::ln(g))
}

/// Log-space variant of [`optimal_logit`]; avoids underflow when both
/// densities are tiny.
pub fn optimal_logit_from_log<P, Fd, Fg>(log_p_d: Fd, log_p_g: Fg, point: &P) -> Result<f64>
where
    Fd: Fn(&P) -> f64,
    Fg: Fn(&P) -> f64,
{
    let d = log_p_d(point);
    let g = log_p_g(point);
    if !g.is_finite() {
        return Err(Error::Domain(format!("generator log-density is {g} at the query point")));
    }
    if !d.is_finite() {
        return Err(Error::Domain(format!("data log-density is {d} at the query point")));
    }
    Ok(d - g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn benchmark_grid_layout() {
        let m = make_grid_mixture(5, 5, 2.0, 0.05).unwrap();
        assert_eq!(m.len(), 25);
        for c in &m.centers {
            for v in c {
                assert!([-4.0, -2.0, 0.0, 2.0, 4.0].contains(v));
            }
        }
        assert!(m.weights.iter().all(|&w| w == 1.0 / 25.0));
        let min_gap = m
            .centers
            .iter()
            .enumerate()
            .flat_map(|(i, a)| m.centers[i + 1..].iter().map(move |b| libm::hypot(a[0] - b[0], a[1] - b[1])))
            .fold(f64::INFINITY, f64::min);
        assert!((min_gap / m.sigma - 40.0).abs() < 1e-9);
    }

    #[test]
    fn single_grid_is_origin() {
        let m = make_grid_mixture(1, 1, 2.0, 0.05).unwrap();
        assert_eq!(m.centers, alloc::vec![[0.0, 0.0]]);
        let expected = 1.0 / (2.0 * core::f64::consts::PI * 0.0025);
        assert!((m.density([0.0, 0.0]) - expected).abs() < 1e-10);
        assert!((expected - 63.6620).abs() < 1e-4);
    }

    #[test]
    fn density_at_center_and_far_away() {
        let m = benchmark_mixture();
        let expected = (1.0 / 25.0) / (2.0 * core::f64::consts::PI * 0.0025);
        assert!((m.density([2.0, -4.0]) - expected).abs() < 1e-12);
        assert!((expected - 2.5465).abs() < 1e-4);
        assert_eq!(m.density([1e3, 1e3]), 0.0);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(make_grid_mixture(0, 5, 2.0, 0.05).is_err());
        assert!(make_grid_mixture(5, 5, 0.0, 0.05).is_err());
        assert!(make_grid_mixture(5, 5, 2.0, 0.0).is_err());
        assert!(MixtureSpec::new(alloc::vec![[0.0, 0.0], [0.0, 0.0]], 1.0, alloc::vec![0.5, 0.5]).is_err());
        assert!(MixtureSpec::new(alloc::vec![[0.0, 0.0], [1.0, 0.0]], 1.0, alloc::vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn tiny_sigma_samples_land_on_centers() {
        let m = MixtureSpec::new(alloc::vec![[1.0, 2.0], [-3.0, 0.5]], 1e-300, alloc::vec![0.5, 0.5]).unwrap();
        let mut rng = seeded(1);
        for _ in 0..100 {
            let p = m.sample(&mut rng);
            assert!(m.centers.contains(&p));
        }
    }

    #[test]
    fn density_integrates_to_one() {
        // Midpoint rule per component neighbourhood is enough: components are
        // 40σ apart, so integrate each over a ±8σ box.
        let m = benchmark_mixture();
        let h = m.sigma / 20.0;
        let steps = 320;
        let mut total = 0.0;
        for c in &m.centers {
            for i in 0..steps {
                for j in 0..steps {
                    let x = c[0] - 8.0 * m.sigma + (i as f64 + 0.5) * h;
                    let y = c[1] - 8.0 * m.sigma + (j as f64 + 0.5) * h;
                    total += m.density([x, y]) * h * h;
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }

    #[test]
    fn prior_moments() {
        let mut rng = seeded(5);
        let n = 100_000;
        let draws = PriorSpec::default().sample_n(&mut rng, n);
        for k in 0..2 {
            let mean = draws.iter().map(|p| p[k]).sum::<f64>() / n as f64;
            let var = draws.iter().map(|p| (p[k] - mean) * (p[k] - mean)).sum::<f64>() / (n - 1) as f64;
            assert!(mean.abs() < 0.02);
            assert!((libm::sqrt(var) - 1.0).abs() < 0.02);
        }
        let again = PriorSpec::default().sample_n(&mut seeded(5), n);
        assert_eq!(draws, again);
    }

    #[test]
    fn optimal_logit_cases() {
        let x = [0.3, -0.1];
        assert_eq!(optimal_logit(|_: &Point| 0.7, |_: &Point| 0.7, &x).unwrap(), 0.0);
        let l = optimal_logit(|_: &Point| 0.4, |_: &Point| 0.2, &x).unwrap();
        assert!((l - core::f64::consts::LN_2).abs() < 1e-15);
        assert!((math::sigmoid(l) - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            optimal_logit(|_: &Point| 0.4, |_: &Point| 0.0, &x),
            Err(Error::Domain(_))
        ));
    }
}
