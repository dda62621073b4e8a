//! Ordinary least squares and logistic regression (IRLS).
//!
//! Every model carries an intercept; `x` holds only the predictors.

use crate::linalg::{least_squares, Matrix};
use crate::{Result, StatError};

/// Log-likelihood change below which IRLS is considered converged.
pub const IRLS_TOL: f64 = 1e-8;
pub const IRLS_MAX_ITER: usize = 100;
/// Linear predictor magnitude treated as a saturated (separated) fit.
const SATURATION: f64 = 25.0;

/// How a fit treats predictor columns that are linear combinations of
/// earlier columns (or of the intercept).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aliasing {
    /// Fail with [`StatError::RankDeficient`].
    Reject,
    /// Fit on the remaining columns; aliased coefficients are reported as 0.
    Drop,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Fitness {
    Linear {
        r2: f64,
        adjusted_r2: f64,
    },
    Logistic {
        loglik: f64,
        null_loglik: f64,
        mcfadden: f64,
        adjusted_mcfadden: f64,
    },
}

#[derive(Debug, Clone)]
pub struct RegressionFit {
    /// Intercept first, then one coefficient per predictor column.
    pub coefficients: Vec<f64>,
    pub n: usize,
    /// Number of predictors (excluding the intercept).
    pub p: usize,
    pub fitness: Fitness,
    pub converged: bool,
    /// Predictor indices (0-based, excluding the intercept) dropped as aliased.
    pub aliased: Vec<usize>,
    /// Log-likelihood after the initial point and each IRLS iteration (logistic only).
    pub loglik_trace: Vec<f64>,
}

impl RegressionFit {
    /// R² for linear fits, McFadden pseudo-R² for logistic fits.
    pub fn fitness_value(&self) -> f64 {
        match self.fitness {
            Fitness::Linear { r2, .. } => r2,
            Fitness::Logistic { mcfadden, .. } => mcfadden,
        }
    }

    pub fn adjusted_fitness(&self) -> f64 {
        match self.fitness {
            Fitness::Linear { adjusted_r2, .. } => adjusted_r2,
            Fitness::Logistic { adjusted_mcfadden, .. } => adjusted_mcfadden,
        }
    }

    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn slope(&self, predictor: usize) -> f64 {
        self.coefficients[predictor + 1]
    }
}

fn check_shape(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(StatError::InvalidArgument(format!(
            "design has {} rows but response has {} values",
            x.rows(),
            y.len()
        )));
    }
    let n = y.len();
    let p = x.cols();
    if n <= p + 1 {
        return Err(StatError::InsufficientData { needed: p + 2, got: n });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(StatError::InvalidArgument("response contains non-finite values".into()));
    }
    Ok(())
}

fn predictor_aliases(aliased: &[usize]) -> Vec<usize> {
    // design column 0 is the intercept, which is never aliased
    aliased.iter().map(|&j| j - 1).collect()
}

/// Least-squares fit with intercept, rejecting rank-deficient designs.
pub fn ols_fit(x: &Matrix, y: &[f64]) -> Result<RegressionFit> {
    ols_fit_with(x, y, Aliasing::Reject)
}

pub fn ols_fit_with(x: &Matrix, y: &[f64], aliasing: Aliasing) -> Result<RegressionFit> {
    check_shape(x, y)?;
    let n = y.len();
    let p = x.cols();
    let design = x.with_intercept();
    let ls = least_squares(&design, y);
    let aliased = predictor_aliases(&ls.aliased);
    if aliasing == Aliasing::Reject {
        if let Some(&column) = aliased.first() {
            return Err(StatError::RankDeficient { column });
        }
    }
    let fitted = design.mul_vec(&ls.coefficients);
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ssr: f64 = y.iter().zip(&fitted).map(|(v, f)| (v - f).powi(2)).sum();
    let r2 = if sst <= 0.0 || p == 0 { 0.0 } else { (1.0 - ssr / sst).clamp(0.0, 1.0) };
    let adjusted_r2 = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - p as f64 - 1.0);
    Ok(RegressionFit {
        coefficients: ls.coefficients,
        n,
        p,
        fitness: Fitness::Linear { r2, adjusted_r2 },
        converged: true,
        aliased,
        loglik_trace: Vec::new(),
    })
}

fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn loglik(design: &Matrix, y: &[f64], beta: &[f64]) -> f64 {
    design
        .mul_vec(beta)
        .iter()
        .zip(y)
        .map(|(eta, yi)| yi * eta - softplus(*eta))
        .sum()
}

/// Maximum-likelihood logistic regression with intercept.
pub fn logistic_fit(x: &Matrix, y: &[f64]) -> Result<RegressionFit> {
    logistic_fit_with(x, y, Aliasing::Reject)
}

pub fn logistic_fit_with(x: &Matrix, y: &[f64], aliasing: Aliasing) -> Result<RegressionFit> {
    check_shape(x, y)?;
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(StatError::InvalidArgument("logistic response must be 0 or 1".into()));
    }
    let n = y.len();
    let p = x.cols();
    let positives = y.iter().filter(|&&v| v == 1.0).count();
    if positives == 0 || positives == n {
        return Err(StatError::SingleClass);
    }

    // Alias structure is a property of the design alone.
    let full = x.with_intercept();
    let probe = least_squares(&full, &vec![0.0; n]);
    let aliased = predictor_aliases(&probe.aliased);
    if aliasing == Aliasing::Reject {
        if let Some(&column) = aliased.first() {
            return Err(StatError::RankDeficient { column });
        }
    }
    let kept: Vec<usize> = (0..=p).filter(|j| !probe.aliased.contains(j)).collect();
    let design = full.select_columns(&kept);

    let ybar = positives as f64 / n as f64;
    let null_loglik = n as f64 * (ybar * ybar.ln() + (1.0 - ybar) * (1.0 - ybar).ln());

    let mut beta = vec![0.0; kept.len()];
    let mut ll = loglik(&design, y, &beta);
    let mut trace = vec![ll];
    let mut converged = false;
    for _ in 0..IRLS_MAX_ITER {
        let eta = design.mul_vec(&beta);
        let mut weighted = Matrix::zeros(n, kept.len());
        let mut z = vec![0.0; n];
        for i in 0..n {
            let mu = sigmoid(eta[i]);
            let w = (mu * (1.0 - mu)).max(1e-12);
            let sw = w.sqrt();
            z[i] = sw * (eta[i] + (y[i] - mu) / w);
            for (j, v) in design.row(i).iter().enumerate() {
                weighted.set(i, j, sw * v);
            }
        }
        let target = least_squares(&weighted, &z).coefficients;
        // step halving keeps the log-likelihood non-decreasing
        let mut step = 1.0;
        let mut candidate = target.clone();
        let mut ll_new = loglik(&design, y, &candidate);
        let mut halvings = 0;
        while ll_new < ll && halvings < 40 {
            step *= 0.5;
            candidate = beta.iter().zip(&target).map(|(b, t)| b + step * (t - b)).collect();
            ll_new = loglik(&design, y, &candidate);
            halvings += 1;
        }
        if ll_new < ll {
            // no ascent direction left at machine precision
            converged = true;
            break;
        }
        beta = candidate;
        let delta = ll_new - ll;
        ll = ll_new;
        trace.push(ll);
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(StatError::Separation);
        }
        if delta < IRLS_TOL {
            converged = true;
            break;
        }
    }
    let eta = design.mul_vec(&beta);
    if eta.iter().any(|e| e.abs() > SATURATION) {
        return Err(StatError::Separation);
    }

    let mut coefficients = vec![0.0; p + 1];
    for (idx, &j) in kept.iter().enumerate() {
        coefficients[j] = beta[idx];
    }
    // the intercept-only model is the null model
    let ll = if p == 0 { null_loglik } else { ll };
    let mcfadden = 1.0 - ll / null_loglik;
    let adjusted_mcfadden = 1.0 - (ll - p as f64) / null_loglik;
    Ok(RegressionFit {
        coefficients,
        n,
        p,
        fitness: Fitness::Logistic { loglik: ll, null_loglik, mcfadden, adjusted_mcfadden },
        converged,
        aliased,
        loglik_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(v: &[f64]) -> Matrix {
        Matrix::from_columns(&[v.to_vec()])
    }

    #[test]
    fn exact_linear_fit() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let fit = ols_fit(&column(&x), &y).unwrap();
        assert!((fit.slope(0) - 2.0).abs() < 1e-12);
        assert!(fit.intercept().abs() < 1e-12);
        assert!((fit.fitness_value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_response_has_zero_r2() {
        let x: Vec<f64> = (0..8).map(f64::from).collect();
        let fit = ols_fit(&column(&x), &[3.0; 8]).unwrap();
        assert_eq!(fit.fitness_value(), 0.0);
        assert!(fit.adjusted_fitness() <= 0.0);
    }

    #[test]
    fn constant_predictor_is_rank_deficient() {
        let x = Matrix::from_columns(&[vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![7.0; 5]]);
        let err = ols_fit(&x, &[1.0, 2.0, 2.0, 4.0, 5.0]).unwrap_err();
        assert_eq!(err, StatError::RankDeficient { column: 1 });
    }

    #[test]
    fn too_few_rows() {
        let x = Matrix::from_columns(&[vec![1.0, 2.0]]);
        assert!(matches!(ols_fit(&x, &[1.0, 2.0]), Err(StatError::InsufficientData { .. })));
    }

    #[test]
    fn intercept_only_logistic_has_zero_mcfadden() {
        let x = Matrix::zeros(6, 0);
        let fit = logistic_fit(&x, &[0.0, 1.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(fit.fitness_value().abs() < 1e-12);
        assert!((fit.intercept() - 2f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn separated_data_is_an_error() {
        let x = column(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let err = logistic_fit(&x, &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap_err();
        assert_eq!(err, StatError::Separation);
    }

    #[test]
    fn quasi_separated_data_is_an_error() {
        let x = column(&[1.0, 2.0, 3.0, 3.0, 4.0, 5.0, 6.0]);
        let err = logistic_fit(&x, &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]).unwrap_err();
        assert_eq!(err, StatError::Separation);
    }

    #[test]
    fn single_class_rejected() {
        let x = column(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(logistic_fit(&x, &[1.0; 4]).unwrap_err(), StatError::SingleClass);
    }

    #[test]
    fn dropped_alias_matches_reduced_fit() {
        let a = vec![0.3, 1.2, 2.2, 2.9, 4.1, 5.3, 5.8, 7.4];
        let y = vec![1.0, 1.5, 2.0, 3.5, 3.0, 5.5, 6.0, 7.0];
        let dup = Matrix::from_columns(&[a.clone(), a.clone()]);
        let fit = ols_fit_with(&dup, &y, Aliasing::Drop).unwrap();
        let single = ols_fit(&column(&a), &y).unwrap();
        assert_eq!(fit.aliased, vec![1]);
        assert!((fit.fitness_value() - single.fitness_value()).abs() < 1e-12);
        assert!(fit.adjusted_fitness() < single.adjusted_fitness());
    }
}
