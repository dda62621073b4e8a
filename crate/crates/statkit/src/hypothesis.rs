//! Two-sided significance tests: pooled two-proportion z, Welch's t, exact sign test.

use crate::dist::{normal_sf, StudentT};
use crate::special::ln_gamma;
use crate::{Result, StatError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestKind {
    TwoProportionZ,
    WelchT,
    Sign,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Effect {
    /// Cohen's d with the pooled standard deviation, `(mean1 - mean2) / sd`.
    CohensD(f64),
    /// `p1 - p2`.
    ProportionDifference(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub test: TestKind,
    pub statistic: f64,
    /// Always in `(0, 1]`.
    pub p_value: f64,
    /// Group sizes; for the sign test, `[wins, losses]`.
    pub n: [usize; 2],
    pub df: Option<f64>,
    pub effect: Option<Effect>,
    /// Set when the statistic is not finite (zero variance with unequal means).
    pub degenerate: bool,
}

impl TestResult {
    pub fn significant_at(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

fn clamp_p(p: f64) -> f64 {
    p.clamp(f64::MIN_POSITIVE, 1.0)
}

/// Pooled two-proportion z-test of `k1/n1` against `k2/n2`.
pub fn two_prop_z_test(k1: u64, n1: u64, k2: u64, n2: u64) -> Result<TestResult> {
    if n1 == 0 || n2 == 0 {
        return Err(StatError::InvalidArgument("group sizes must be positive".into()));
    }
    if k1 > n1 || k2 > n2 {
        return Err(StatError::InvalidArgument("successes exceed trials".into()));
    }
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let p1 = k1 as f64 / n1f;
    let p2 = k2 as f64 / n2f;
    let pooled = (k1 + k2) as f64 / (n1f + n2f);
    let (z, p) = if pooled <= 0.0 || pooled >= 1.0 {
        (0.0, 1.0)
    } else {
        let se = (pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f)).sqrt();
        let z = (p1 - p2) / se;
        (z, clamp_p(2.0 * normal_sf(z.abs())))
    };
    Ok(TestResult {
        test: TestKind::TwoProportionZ,
        statistic: z,
        p_value: p,
        n: [n1 as usize, n2 as usize],
        df: None,
        effect: Some(Effect::ProportionDifference(p1 - p2)),
        degenerate: false,
    })
}

fn mean_var(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Cohen's d using the pooled standard deviation.
pub fn cohens_d(sample1: &[f64], sample2: &[f64]) -> Option<f64> {
    if sample1.len() < 2 || sample2.len() < 2 {
        return None;
    }
    let (m1, v1) = mean_var(sample1);
    let (m2, v2) = mean_var(sample2);
    let (n1, n2) = (sample1.len() as f64, sample2.len() as f64);
    let pooled = (((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / (n1 + n2 - 2.0)).sqrt();
    if pooled > 0.0 {
        Some((m1 - m2) / pooled)
    } else if m1 == m2 {
        Some(0.0)
    } else {
        None
    }
}

/// Welch's two-sided t-test with Welch–Satterthwaite degrees of freedom.
pub fn t_test(sample1: &[f64], sample2: &[f64]) -> Result<TestResult> {
    if sample1.len() < 2 || sample2.len() < 2 {
        return Err(StatError::InsufficientData { needed: 2, got: sample1.len().min(sample2.len()) });
    }
    if sample1.iter().chain(sample2).any(|v| !v.is_finite()) {
        return Err(StatError::InvalidArgument("samples contain non-finite values".into()));
    }
    let (m1, v1) = mean_var(sample1);
    let (m2, v2) = mean_var(sample2);
    let (n1, n2) = (sample1.len() as f64, sample2.len() as f64);
    let a = v1 / n1;
    let b = v2 / n2;
    let n = [sample1.len(), sample2.len()];
    let effect = cohens_d(sample1, sample2).map(Effect::CohensD);
    if a + b == 0.0 {
        let equal = m1 == m2;
        return Ok(TestResult {
            test: TestKind::WelchT,
            statistic: if equal { 0.0 } else { f64::INFINITY.copysign(m1 - m2) },
            p_value: if equal { 1.0 } else { f64::MIN_POSITIVE },
            n,
            df: None,
            effect,
            degenerate: !equal,
        });
    }
    let t = (m1 - m2) / (a + b).sqrt();
    let df = (a + b).powi(2) / (a * a / (n1 - 1.0) + b * b / (n2 - 1.0));
    let p = StudentT::new(df)?.two_sided_p(t);
    Ok(TestResult {
        test: TestKind::WelchT,
        statistic: t,
        p_value: clamp_p(p),
        n,
        df: Some(df),
        effect,
        degenerate: false,
    })
}

/// `P(X <= k)` for `X ~ Binomial(n, 1/2)`, summed exactly in log space.
fn binomial_half_cdf(k: u64, n: u64) -> f64 {
    let ln_half_n = n as f64 * 0.5f64.ln();
    let ln_n_fact = ln_gamma(n as f64 + 1.0);
    (0..=k)
        .map(|i| {
            let ln_c = ln_n_fact - ln_gamma(i as f64 + 1.0) - ln_gamma((n - i) as f64 + 1.0);
            (ln_c + ln_half_n).exp()
        })
        .sum()
}

/// Exact two-sided sign test; ties are discarded.
pub fn sign_test(wins: u64, losses: u64, ties: u64) -> Result<TestResult> {
    let _ = ties;
    let n = wins + losses;
    if n == 0 {
        return Err(StatError::AllTies);
    }
    let k = wins.min(losses);
    let p = clamp_p((2.0 * binomial_half_cdf(k, n)).min(1.0));
    Ok(TestResult {
        test: TestKind::Sign,
        statistic: wins as f64 - losses as f64,
        p_value: p,
        n: [wins as usize, losses as usize],
        df: None,
        effect: Some(Effect::ProportionDifference((wins as f64 - losses as f64) / n as f64)),
        degenerate: false,
    })
}
