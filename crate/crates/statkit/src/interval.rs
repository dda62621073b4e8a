//! Interval estimates: Wilson score and Student's t.

use crate::dist::{normal_quantile, StudentT};
use crate::{Result, StatError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntervalMethod {
    Wilson,
    StudentT,
    BootstrapBca,
}

impl IntervalMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            IntervalMethod::Wilson => "wilson",
            IntervalMethod::StudentT => "student_t",
            IntervalMethod::BootstrapBca => "bootstrap_bca",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalEstimate {
    pub point: f64,
    pub low: f64,
    pub high: f64,
    pub level: f64,
    pub method: IntervalMethod,
}

impl IntervalEstimate {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, v: f64) -> bool {
        self.low <= v && v <= self.high
    }
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(StatError::InvalidArgument(format!("confidence level must lie in (0, 1), got {level}")))
    }
}

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: u64, n: u64, level: f64) -> Result<IntervalEstimate> {
    check_level(level)?;
    if n == 0 || k > n {
        return Err(StatError::InvalidArgument(format!("need 0 <= k <= n and n >= 1, got k={k}, n={n}")));
    }
    let z = normal_quantile(0.5 + 0.5 * level)?;
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let low = if k == 0 { 0.0 } else { (centre - half).clamp(0.0, p) };
    let high = if k == n { 1.0 } else { (centre + half).clamp(p, 1.0) };
    Ok(IntervalEstimate { point: p, low, high, level, method: IntervalMethod::Wilson })
}

/// `mean ± t · s / sqrt(n)`.
pub fn student_t_interval(sample: &[f64], level: f64) -> Result<IntervalEstimate> {
    check_level(level)?;
    if sample.len() < 2 {
        return Err(StatError::InsufficientData { needed: 2, got: sample.len() });
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = if var > 0.0 {
        StudentT::new(n - 1.0)?.quantile(0.5 + 0.5 * level)? * (var / n).sqrt()
    } else {
        0.0
    };
    Ok(IntervalEstimate {
        point: mean,
        low: mean - half,
        high: mean + half,
        level,
        method: IntervalMethod::StudentT,
    })
}
