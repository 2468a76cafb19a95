//! Adversarial losses on logits, each returning the loss and its analytic
//! gradient with respect to every logit.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{sigmoid, softplus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    NonSaturating,
    Hinge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorLoss {
    pub loss: f64,
    pub grad_real: Vec<f64>,
    pub grad_fake: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorLoss {
    pub loss: f64,
    pub grad_fake: Vec<f64>,
}

fn mean_or_zero(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Binary cross-entropy with real → 1 and fake → 0:
/// `mean softplus(-r) + mean softplus(f)`.
pub fn ns_d_loss(real_logits: &[f64], fake_logits: &[f64]) -> DiscriminatorLoss {
    let (n, m) = (real_logits.len(), fake_logits.len());
    let loss = mean_or_zero(real_logits.iter().map(|&r| softplus(-r)).sum(), n)
        + mean_or_zero(fake_logits.iter().map(|&f| softplus(f)).sum(), m);
    let grad_real = real_logits.iter().map(|&r| -sigmoid(-r) / n as f64).collect();
    let grad_fake = fake_logits.iter().map(|&f| sigmoid(f) / m as f64).collect();
    DiscriminatorLoss {
        loss,
        grad_real,
        grad_fake,
    }
}

/// `-mean log σ(f)`.
pub fn ns_g_loss(fake_logits: &[f64]) -> GeneratorLoss {
    let m = fake_logits.len();
    GeneratorLoss {
        loss: mean_or_zero(fake_logits.iter().map(|&f| softplus(-f)).sum(), m),
        grad_fake: fake_logits.iter().map(|&f| -sigmoid(-f) / m as f64).collect(),
    }
}

/// `mean max(0, 1 - r) + mean max(0, 1 + f)`; subgradient 0 at the kink.
pub fn hinge_d_loss(real_logits: &[f64], fake_logits: &[f64]) -> DiscriminatorLoss {
    let (n, m) = (real_logits.len(), fake_logits.len());
    let loss = mean_or_zero(real_logits.iter().map(|&r| (1.0 - r).max(0.0)).sum(), n)
        + mean_or_zero(fake_logits.iter().map(|&f| (1.0 + f).max(0.0)).sum(), m);
    let grad_real = real_logits
        .iter()
        .map(|&r| if 1.0 - r > 0.0 { -1.0 / n as f64 } else { 0.0 })
        .collect();
    let grad_fake = fake_logits
        .iter()
        .map(|&f| if 1.0 + f > 0.0 { 1.0 / m as f64 } else { 0.0 })
        .collect();
    DiscriminatorLoss {
        loss,
        grad_real,
        grad_fake,
    }
}

/// `-mean f`.
pub fn hinge_g_loss(fake_logits: &[f64]) -> GeneratorLoss {
    let m = fake_logits.len();
    GeneratorLoss {
        loss: -mean_or_zero(fake_logits.iter().sum(), m),
        grad_fake: alloc::vec![-1.0 / m as f64; m],
    }
}

impl LossKind {
    pub fn d_loss(self, real_logits: &[f64], fake_logits: &[f64]) -> DiscriminatorLoss {
        match self {
            LossKind::NonSaturating => ns_d_loss(real_logits, fake_logits),
            LossKind::Hinge => hinge_d_loss(real_logits, fake_logits),
        }
    }

    pub fn g_loss(self, fake_logits: &[f64]) -> GeneratorLoss {
        match self {
            LossKind::NonSaturating => ns_g_loss(fake_logits),
            LossKind::Hinge => hinge_g_loss(fake_logits),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::LN_2;

    fn fd<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], i: usize) -> f64 {
        let h = 1e-5;
        let mut up = x.to_vec();
        let mut dn = x.to_vec();
        up[i] += h;
        dn[i] -= h;
        (f(&up) - f(&dn)) / (2.0 * h)
    }

    #[test]
    fn ns_reference_values() {
        let d = ns_d_loss(&[0.0; 4], &[0.0; 3]);
        assert!((d.loss - 2.0 * LN_2).abs() < 1e-15);
        let perfect = ns_d_loss(&[50.0; 4], &[-50.0; 4]);
        assert!(perfect.loss < 1e-20);
        assert!((ns_g_loss(&[0.0; 5]).loss - LN_2).abs() < 1e-15);
        assert!(ns_g_loss(&[50.0; 5]).loss < 1e-20);
        // Stable for huge inputs.
        let wild = ns_d_loss(&[-1e4, 1e4], &[1e4]);
        assert!(wild.loss.is_finite());
    }

    #[test]
    fn ns_gradients_match_finite_differences() {
        let real = vec![0.3, -1.2, 2.5];
        let fake = vec![-0.7, 1.1];
        let d = ns_d_loss(&real, &fake);
        for i in 0..real.len() {
            let num = fd(|r| ns_d_loss(r, &fake).loss, &real, i);
            assert!((num - d.grad_real[i]).abs() < 1e-9);
            assert!((d.grad_real[i] + (1.0 - sigmoid(real[i])) / 3.0).abs() < 1e-15);
        }
        for i in 0..fake.len() {
            let num = fd(|f| ns_d_loss(&real, f).loss, &fake, i);
            assert!((num - d.grad_fake[i]).abs() < 1e-9);
        }
        let g = ns_g_loss(&fake);
        for i in 0..fake.len() {
            let num = fd(|f| ns_g_loss(f).loss, &fake, i);
            assert!((num - g.grad_fake[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn hinge_reference_values() {
        assert_eq!(hinge_d_loss(&[2.0], &[-2.0]).loss, 0.0);
        let d = hinge_d_loss(&[0.0], &[0.0]);
        assert_eq!(d.loss, 2.0);
        assert_eq!(hinge_g_loss(&[0.0]).loss, 0.0);
        // Kink points use the zero subgradient.
        let k = hinge_d_loss(&[1.0], &[-1.0]);
        assert_eq!(k.grad_real, vec![0.0]);
        assert_eq!(k.grad_fake, vec![0.0]);
    }

    #[test]
    fn hinge_gradients_match_finite_differences() {
        let real = vec![0.3, -1.2, 2.5, 0.99];
        let fake = vec![-0.7, 1.1, -3.0];
        let d = hinge_d_loss(&real, &fake);
        for i in 0..real.len() {
            let num = fd(|r| hinge_d_loss(r, &fake).loss, &real, i);
            assert!((num - d.grad_real[i]).abs() < 1e-9);
        }
        for i in 0..fake.len() {
            let num = fd(|f| hinge_d_loss(&real, f).loss, &fake, i);
            assert!((num - d.grad_fake[i]).abs() < 1e-9);
        }
        let g = hinge_g_loss(&fake);
        for i in 0..fake.len() {
            let num = fd(|f| hinge_g_loss(f).loss, &fake, i);
            assert!((num - g.grad_fake[i]).abs() < 1e-9);
        }
    }
}
