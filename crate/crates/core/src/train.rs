//! GAN training, continued discriminator training with early stopping, and
//! the calibration head for critics that do not emit BCE logits.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::drs::{Critic, NetworkGenerator, SampleSource};
use crate::error::{Error, Result};
use crate::loss::{ns_d_loss, LossKind};
use crate::math::{sigmoid, softplus};
use crate::nn::{mlp_spec, AdamHyper, AdamState, Matrix, Network};
use crate::rng::substream;
use crate::target::{MixtureSpec, PriorSpec};
use crate::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub d_adam: AdamHyper,
    pub g_adam: AdamHyper,
    pub loss_kind: LossKind,
    /// Record `(step, d_loss, g_loss)` every this many iterations.
    pub history_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 30_000,
            batch_size: 256,
            hidden: vec![128, 128, 128],
            // A generator that outpaces the critic spreads over more modes.
            d_adam: AdamHyper {
                learning_rate: 2e-4,
                beta2: 0.9,
                ..AdamHyper::default()
            },
            g_adam: AdamHyper {
                learning_rate: 1e-3,
                beta2: 0.9,
                ..AdamHyper::default()
            },
            loss_kind: LossKind::NonSaturating,
            history_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.history_every == 0 {
            return Err(Error::Config("batch_size and history_every must be positive".into()));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::Config("hidden widths must be positive".into()));
        }
        for (name, h) in [("d_adam", &self.d_adam), ("g_adam", &self.g_adam)] {
            if !(h.learning_rate > 0.0
                && (0.0..1.0).contains(&h.beta1)
                && (0.0..1.0).contains(&h.beta2)
                && h.eps > 0.0)
            {
                return Err(Error::Config(format!("invalid Adam hyperparameters in {name}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub step: usize,
    pub d_loss: f64,
    pub g_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedGan {
    pub generator: Network,
    pub discriminator: Network,
    pub history: Vec<HistoryEntry>,
    pub loss_kind: LossKind,
}

impl TrainedGan {
    pub fn generator_source(&self) -> NetworkGenerator<'_> {
        NetworkGenerator::new(&self.generator)
    }
}

fn stack(a: &[Point], b: &[Point]) -> Matrix {
    let mut m = Matrix::from_points(a);
    m.data.extend(b.iter().flatten());
    m.rows += b.len();
    m
}

/// Alternating 1:1 discriminator/generator updates. Streams `init-g`,
/// `init-d` and `train` of `seed` drive initialisation and minibatches.
pub fn train_gan(mixture: &MixtureSpec, config: &TrainConfig, seed: u64) -> Result<TrainedGan> {
    config.validate()?;
    mixture.validate()?;
    let mut generator = Network::init(&mlp_spec(2, &config.hidden, 2), &mut substream(seed, "init-g"))?;
    let mut discriminator = Network::init(&mlp_spec(2, &config.hidden, 1), &mut substream(seed, "init-d"))?;
    let mut g_opt = AdamState::new(&generator, config.g_adam);
    let mut d_opt = AdamState::new(&discriminator, config.d_adam);
    let mut rng = substream(seed, "train");
    let prior = PriorSpec::default();
    let b = config.batch_size;
    let mut history = Vec::new();

    let diverged = |step: usize, e: Error| Error::Diverged {
        step,
        reason: format!("{e}"),
    };

    for step in 1..=config.steps {
        // Discriminator: one batch of real and one of fake, stacked.
        let real = mixture.sample_n(&mut rng, b);
        let z = prior.sample_n(&mut rng, b);
        let fake = generator.predict(&Matrix::from_points(&z)).map_err(|e| diverged(step, e))?;
        let batch = stack(&real, &fake.to_points());
        let tape = discriminator.forward(&batch).map_err(|e| diverged(step, e))?;
        let logits = &tape.output().data;
        let d = config.loss_kind.d_loss(&logits[..b], &logits[b..]);
        let mut grad = d.grad_real;
        grad.extend_from_slice(&d.grad_fake);
        let d_grads = discriminator.param_gradients(&tape, &Matrix::from_vec(2 * b, 1, grad)?)?;
        d_opt.step(&mut discriminator, &d_grads).map_err(|e| diverged(step, e))?;

        // Generator: backprop the generator loss through the frozen critic.
        let z = prior.sample_n(&mut rng, b);
        let g_tape = generator.forward(&Matrix::from_points(&z)).map_err(|e| diverged(step, e))?;
        let d_tape = discriminator.forward(g_tape.output()).map_err(|e| diverged(step, e))?;
        let g = config.loss_kind.g_loss(&d_tape.output().data);
        let dx = discriminator.backward_input(&d_tape, &Matrix::from_vec(b, 1, g.grad_fake)?)?;
        let g_grads = generator.param_gradients(&g_tape, &dx)?;
        g_opt.step(&mut generator, &g_grads).map_err(|e| diverged(step, e))?;

        if !(d.loss.is_finite() && g.loss.is_finite()) {
            return Err(Error::Diverged {
                step,
                reason: format!("non-finite loss (d = {}, g = {})", d.loss, g.loss),
            });
        }
        if step % config.history_every == 0 {
            history.push(HistoryEntry {
                step,
                d_loss: d.loss,
                g_loss: g.loss,
            });
        }
    }

    Ok(TrainedGan {
        generator,
        discriminator,
        history,
        loss_kind: config.loss_kind,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KeepTrainingConfig {
    pub validation_size: usize,
    pub eval_every: usize,
    /// Evaluations without improvement before stopping; 0 returns the input.
    pub patience: usize,
    pub max_steps: usize,
    pub batch_size: usize,
    pub adam: AdamHyper,
}

impl Default for KeepTrainingConfig {
    fn default() -> Self {
        Self {
            validation_size: 10_000,
            eval_every: 100,
            patience: 10,
            max_steps: 20_000,
            batch_size: 256,
            adam: AdamHyper::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeepTrainingOutcome {
    pub discriminator: Network,
    pub initial_validation_loss: f64,
    pub best_validation_loss: f64,
    pub best_step: usize,
    pub steps_run: usize,
    /// `(step, validation_loss)` at every evaluation, starting at step 0.
    pub validation_history: Vec<(usize, f64)>,
}

/// Continues training the discriminator of `gan` with its generator frozen.
pub fn keep_training(
    gan: &TrainedGan,
    mixture: &MixtureSpec,
    config: &KeepTrainingConfig,
    seed: u64,
) -> Result<KeepTrainingOutcome> {
    keep_training_with(&gan.discriminator, mixture, &gan.generator_source(), config, seed)
}

/// [`keep_training`] against an arbitrary source of fake samples.
///
/// The BCE loss on a fixed validation set (real and fake, `validation_size`
/// each) is evaluated every `eval_every` steps; training stops after
/// `patience` evaluations without improvement and the best checkpoint is
/// returned, so the result never has a worse validation loss than the input.
pub fn keep_training_with<S>(
    discriminator: &Network,
    mixture: &MixtureSpec,
    fakes: &S,
    config: &KeepTrainingConfig,
    seed: u64,
) -> Result<KeepTrainingOutcome>
where
    S: SampleSource<Point = Point>,
{
    if config.validation_size == 0 || config.eval_every == 0 || config.batch_size == 0 {
        return Err(Error::Config(
            "validation_size, eval_every and batch_size must be positive".into(),
        ));
    }
    let mut val_rng = substream(seed, "keep-training-validation");
    let val_real = mixture.sample_n(&mut val_rng, config.validation_size);
    let val_fake: Vec<Point> = fakes
        .draw(&mut val_rng, config.validation_size)?
        .into_iter()
        .map(|(_, x)| x)
        .collect();
    let validation_loss = |net: &Network| -> Result<f64> {
        Ok(ns_d_loss(&net.logits(&val_real)?, &net.logits(&val_fake)?).loss)
    };

    let initial = validation_loss(discriminator)?;
    let mut outcome = KeepTrainingOutcome {
        discriminator: discriminator.clone(),
        initial_validation_loss: initial,
        best_validation_loss: initial,
        best_step: 0,
        steps_run: 0,
        validation_history: vec![(0, initial)],
    };
    if config.patience == 0 {
        return Ok(outcome);
    }

    let mut net = discriminator.clone();
    let mut opt = AdamState::new(&net, config.adam);
    let mut rng = substream(seed, "keep-training");
    let b = config.batch_size;
    let mut stale = 0usize;
    for step in 1..=config.max_steps {
        let real = mixture.sample_n(&mut rng, b);
        let fake: Vec<Point> = fakes.draw(&mut rng, b)?.into_iter().map(|(_, x)| x).collect();
        let tape = net.forward(&stack(&real, &fake))?;
        let logits = &tape.output().data;
        let d = ns_d_loss(&logits[..b], &logits[b..]);
        let mut grad = d.grad_real;
        grad.extend_from_slice(&d.grad_fake);
        let grads = net.param_gradients(&tape, &Matrix::from_vec(2 * b, 1, grad)?)?;
        opt.step(&mut net, &grads).map_err(|e| Error::Diverged {
            step,
            reason: format!("{e}"),
        })?;
        outcome.steps_run = step;

        if step % config.eval_every == 0 {
            let loss = validation_loss(&net)?;
            outcome.validation_history.push((step, loss));
            if loss < outcome.best_validation_loss {
                outcome.best_validation_loss = loss;
                outcome.best_step = step;
                outcome.discriminator = net.clone();
                stale = 0;
            } else {
                stale += 1;
                if stale >= config.patience {
                    break;
                }
            }
        }
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticKind {
    Direct,
    Calibrated,
}

/// A frozen discriminator with a scalar affine head `a · D̃(x) + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedCritic {
    pub base: Network,
    pub weight: f64,
    pub bias: f64,
    pub kind: CriticKind,
}

impl CalibratedCritic {
    pub fn direct(base: Network) -> Self {
        Self {
            base,
            weight: 1.0,
            bias: 0.0,
            kind: CriticKind::Direct,
        }
    }
}

impl Critic<Point> for CalibratedCritic {
    fn logits(&self, points: &[Point]) -> Result<Vec<f64>> {
        let mut out = self.base.logits(points)?;
        if self.kind == CriticKind::Calibrated {
            for v in &mut out {
                *v = self.weight * *v + self.bias;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Ridge penalty on `(a, b)`; keeps Newton's method bounded on separable data.
    pub l2: f64,
    /// Real and fake samples drawn per class when calibrating inside an experiment.
    pub samples_per_class: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-10,
            l2: 1e-8,
            samples_per_class: 10_000,
        }
    }
}

/// Logistic regression of the labels (real = 1, fake = 0) on scalar scores,
/// by damped Newton iterations. Returns `(weight, bias)`.
pub fn fit_affine_logistic(real_scores: &[f64], fake_scores: &[f64], config: &CalibrationConfig) -> Result<(f64, f64)> {
    if real_scores.is_empty() || fake_scores.is_empty() {
        return Err(Error::Config("calibration needs both real and fake samples".into()));
    }
    if real_scores.iter().chain(fake_scores).any(|s| !s.is_finite()) {
        return Err(Error::Numeric("non-finite critic score in calibration data".into()));
    }
    let total = (real_scores.len() + fake_scores.len()) as f64;
    let data = || {
        real_scores
            .iter()
            .map(|&s| (s, 1.0))
            .chain(fake_scores.iter().map(|&s| (s, 0.0)))
    };
    let objective = |a: f64, b: f64| {
        let nll: f64 = data()
            .map(|(s, y)| {
                let z = a * s + b;
                if y > 0.5 {
                    softplus(-z)
                } else {
                    softplus(z)
                }
            })
            .sum();
        nll / total + 0.5 * config.l2 * (a * a + b * b)
    };

    let (mut a, mut b) = (1.0, 0.0);
    let mut current = objective(a, b);
    for _ in 0..config.max_iterations {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (s, y) in data() {
            let p = sigmoid(a * s + b);
            let r = p - y;
            let w = p * (1.0 - p);
            ga += r * s;
            gb += r;
            haa += w * s * s;
            hab += w * s;
            hbb += w;
        }
        ga = ga / total + config.l2 * a;
        gb = gb / total + config.l2 * b;
        haa = haa / total + config.l2;
        hab /= total;
        hbb = hbb / total + config.l2;
        let det = haa * hbb - hab * hab;
        let (da, db) = if det > 0.0 && det.is_finite() {
            ((hbb * ga - hab * gb) / det, (haa * gb - hab * ga) / det)
        } else {
            (ga, gb)
        };
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..50 {
            let (na, nb) = (a - t * da, b - t * db);
            let candidate = objective(na, nb);
            if candidate <= current {
                a = na;
                b = nb;
                current = candidate;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved || (t * da).abs().max((t * db).abs()) < config.tolerance {
            break;
        }
    }
    Ok((a, b))
}

/// Fits the affine head on top of a frozen discriminator with BCE.
pub fn fit_calibration_layer(
    base: &Network,
    real_batch: &[Point],
    fake_batch: &[Point],
    config: &CalibrationConfig,
) -> Result<CalibratedCritic> {
    if real_batch.is_empty() || fake_batch.is_empty() {
        return Err(Error::Config("calibration needs both real and fake samples".into()));
    }
    let real = base.logits(real_batch)?;
    let fake = base.logits(fake_batch)?;
    let (weight, bias) = fit_affine_logistic(&real, &fake, config)?;
    Ok(CalibratedCritic {
        base: base.clone(),
        weight,
        bias,
        kind: CriticKind::Calibrated,
    })
}
