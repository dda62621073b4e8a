//! Bias-corrected and accelerated (BCa) bootstrap over resampleable cases.
//!
//! Resample `b` draws its case indices from ChaCha8 seeded with the caller's
//! seed and switched to stream `b`, so every replicate is a pure function of
//! `(seed, b)`. Replicates are computed in parallel and collected by index.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dist::{normal_cdf, normal_quantile};
use crate::interval::{check_level, IntervalEstimate, IntervalMethod};
use crate::{Result, StatError};

pub const MIN_RESAMPLES: usize = 1000;

/// Generator for resample `index` under `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Linear-interpolation quantile of sorted data.
fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Full bootstrap output, for callers that want more than the interval.
#[derive(Debug, Clone)]
pub struct BcaDetail {
    pub interval: IntervalEstimate,
    pub bias_correction: f64,
    pub acceleration: f64,
    pub resamples: usize,
    /// Resamples on which the statistic was undefined.
    pub failures: usize,
}

/// BCa interval for `statistic` over case resamples of `units`.
///
/// The statistic returns `None` where it is undefined (e.g. alpha on a
/// resample with no variation).
pub fn bootstrap_bca<T, F>(units: &[T], statistic: F, resamples: usize, level: f64, seed: u64) -> Result<IntervalEstimate>
where
    T: Sync,
    F: Fn(&[&T]) -> Option<f64> + Sync,
{
    bootstrap_bca_detail(units, statistic, resamples, level, seed).map(|d| d.interval)
}

pub fn bootstrap_bca_detail<T, F>(
    units: &[T],
    statistic: F,
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<BcaDetail>
where
    T: Sync,
    F: Fn(&[&T]) -> Option<f64> + Sync,
{
    check_level(level)?;
    if resamples < MIN_RESAMPLES {
        return Err(StatError::InvalidArgument(format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples, got {resamples}"
        )));
    }
    if units.is_empty() {
        return Err(StatError::InsufficientData { needed: 1, got: 0 });
    }
    let all: Vec<&T> = units.iter().collect();
    let theta = statistic(&all).filter(|v| v.is_finite()).ok_or(StatError::StatisticUndefined)?;

    let n = units.len();
    let replicates: Vec<Option<f64>> = (0..resamples as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b);
            let sample: Vec<&T> = (0..n).map(|_| &units[rng.random_range(0..n)]).collect();
            statistic(&sample).filter(|v| v.is_finite())
        })
        .collect();
    let mut valid: Vec<f64> = replicates.iter().flatten().copied().collect();
    let failures = resamples - valid.len();
    if failures * 2 > resamples {
        return Err(StatError::UnstableStatistic { failure_rate: failures as f64 / resamples as f64 });
    }
    valid.sort_by(f64::total_cmp);
    let m = valid.len() as f64;

    let less = valid.iter().filter(|&&v| v < theta).count() as f64;
    let equal = valid.iter().filter(|&&v| v == theta).count() as f64;
    let prop = ((less + 0.5 * equal) / m).clamp(0.5 / m, 1.0 - 0.5 / m);
    let z0 = normal_quantile(prop)?;

    let jack: Vec<f64> = (0..n)
        .into_par_iter()
        .filter_map(|i| {
            let rest: Vec<&T> = units.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, u)| u).collect();
            statistic(&rest).filter(|v| v.is_finite())
        })
        .collect();
    let acceleration = if jack.len() >= 2 {
        let mean = jack.iter().sum::<f64>() / jack.len() as f64;
        let num: f64 = jack.iter().map(|v| (mean - v).powi(3)).sum();
        let den: f64 = 6.0 * jack.iter().map(|v| (mean - v).powi(2)).sum::<f64>().powf(1.5);
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    } else {
        0.0
    };

    let adjusted = |tail: f64| -> Result<f64> {
        let z = normal_quantile(tail)?;
        let shifted = z0 + z;
        Ok(normal_cdf(z0 + shifted / (1.0 - acceleration * shifted)))
    };
    let lo_q = adjusted(0.5 * (1.0 - level))?;
    let hi_q = adjusted(0.5 * (1.0 + level))?;
    let low = sorted_quantile(&valid, lo_q).min(theta);
    let high = sorted_quantile(&valid, hi_q).max(theta);
    Ok(BcaDetail {
        interval: IntervalEstimate { point: theta, low, high, level, method: IntervalMethod::BootstrapBca },
        bias_correction: z0,
        acceleration,
        resamples,
        failures,
    })
}
