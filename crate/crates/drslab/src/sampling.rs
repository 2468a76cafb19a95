use drs_core::drs::{threshold_for_rate, Critic, SampleSource};
use drs_core::Point;
use rand::Rng;

use crate::error::LabError;

const BATCH: usize = 1_000;
const MIN_POOL: usize = 10_000;
const MAX_POOL: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSample<P> {
    pub threshold: f64,
    /// Keep-rate on the calibration pool.
    pub pool_rate: f64,
    /// Kept / drawn on the sampling pass.
    pub realized_rate: f64,
    pub draws: usize,
    pub points: Vec<P>,
}

/// Hard-threshold baseline: picks the logit threshold whose keep-rate on a
/// fresh pool matches `rate`, then keeps proposals at or above it until `n`
/// are collected.
pub fn threshold_sample<S, C, R>(
    source: &S,
    critic: &C,
    rate: f64,
    n: usize,
    rng: &mut R,
) -> Result<ThresholdSample<S::Point>, LabError>
where
    S: SampleSource,
    C: Critic<S::Point> + ?Sized,
    R: Rng + ?Sized,
{
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(LabError::Config(format!("threshold rate {rate} outside (0, 1]")));
    }
    let pool_size = ((2.0 * n as f64 / rate).ceil() as usize).clamp(MIN_POOL, MAX_POOL);
    let pool: Vec<S::Point> = source.draw(rng, pool_size)?.into_iter().map(|(_, x)| x).collect();
    let choice = threshold_for_rate(&critic.logits(&pool)?, rate)?;

    // Generous cap: ten times the draws the pool rate predicts.
    let cap = ((10.0 * n as f64 / choice.achieved_rate).ceil() as usize).max(MIN_POOL);
    let mut points = Vec::with_capacity(n);
    let mut draws = 0;
    while points.len() < n {
        if draws >= cap {
            return Err(LabError::Core(drs_core::Error::AcceptanceFloor {
                rate: points.len() as f64 / draws as f64,
                floor: choice.achieved_rate,
                window: draws,
                draws,
            }));
        }
        let batch: Vec<S::Point> = source.draw(rng, BATCH)?.into_iter().map(|(_, x)| x).collect();
        let logits = critic.logits(&batch)?;
        for (x, l) in batch.into_iter().zip(logits) {
            draws += 1;
            if l >= choice.threshold {
                points.push(x);
                if points.len() == n {
                    break;
                }
            }
        }
    }
    Ok(ThresholdSample {
        threshold: choice.threshold,
        pool_rate: choice.achieved_rate,
        realized_rate: n as f64 / draws as f64,
        draws,
        points,
    })
}

/// `n` unfiltered generator samples.
pub fn unfiltered<S, R>(source: &S, n: usize, rng: &mut R) -> Result<Vec<Point>, LabError>
where
    S: SampleSource<Point = Point>,
    R: Rng + ?Sized,
{
    Ok(source.draw(rng, n)?.into_iter().map(|(_, x)| x).collect())
}
