//! Power of the two-sample t-test and the regression F-test.

use crate::dist::{FisherF, NoncentralF, NoncentralT, StudentT};
use crate::{Result, StatError};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(StatError::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Power of the two-sided two-sample t-test with `n_per_group` observations
/// per group at effect size `d` (Cohen's d).
///
/// Degrees of freedom `2n - 2`, noncentrality `d * sqrt(n / 2)`.
pub fn power_t_test(d: f64, n_per_group: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(d.is_finite() && d >= 0.0) {
        return Err(StatError::InvalidArgument(format!("effect size must be non-negative, got {d}")));
    }
    if n_per_group < 2 {
        return Err(StatError::InsufficientData { needed: 2, got: n_per_group });
    }
    let n = n_per_group as f64;
    let df = 2.0 * n - 2.0;
    let crit = StudentT::new(df)?.quantile(1.0 - 0.5 * alpha)?;
    let shifted = NoncentralT::new(df, d * (0.5 * n).sqrt())?;
    let power = 1.0 - shifted.cdf(crit) + shifted.cdf(-crit);
    Ok(power.clamp(0.0, 1.0))
}

/// Power of the F-test on `df_numerator` regression predictors with `n`
/// observations at Cohen's `f2`; noncentrality `f2 * n`, denominator df
/// `n - df_numerator - 1`.
pub fn power_f_test(f2: f64, n: usize, df_numerator: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(f2.is_finite() && f2 >= 0.0) {
        return Err(StatError::InvalidArgument(format!("f2 must be non-negative, got {f2}")));
    }
    if df_numerator == 0 || n <= df_numerator + 1 {
        return Err(StatError::InsufficientData { needed: df_numerator + 2, got: n });
    }
    let df1 = df_numerator as f64;
    let df2 = (n - df_numerator - 1) as f64;
    let crit = FisherF::new(df1, df2)?.quantile(1.0 - alpha)?;
    let shifted = NoncentralF::new(df1, df2, f2 * n as f64)?;
    Ok((1.0 - shifted.cdf(crit)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_effect_gives_alpha() {
        for &a in &[0.01, 0.05, 0.1] {
            assert!((power_t_test(0.0, 30, a).unwrap() - a).abs() < 1e-6);
            assert!((power_f_test(0.0, 100, 2, a).unwrap() - a).abs() < 1e-9);
        }
    }

    #[test]
    fn large_df_matches_normal_approximation() {
        // used to stall the quadrature on rounding noise
        for &(d, n) in &[(0.2, 400usize), (0.2, 200), (0.1, 1000)] {
            let approx = crate::dist::normal_cdf(d * (0.5 * n as f64).sqrt() - 1.959_963_985);
            let p = power_t_test(d, n, 0.05).unwrap();
            assert!((p - approx).abs() < 0.005, "d={d} n={n}: {p} vs {approx}");
        }
    }

    #[test]
    fn saturates() {
        assert!(power_t_test(3.0, 100, 0.05).unwrap() > 0.999);
        assert!(power_f_test(1.0, 400, 1, 0.05).unwrap() > 0.999);
    }
}
