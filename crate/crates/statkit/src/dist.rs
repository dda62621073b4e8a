//! Continuous distributions used by the tests and power routines.
//!
//! Central distributions reduce to the incomplete gamma/beta functions.
//! The noncentral t CDF is evaluated by adaptive quadrature over the scaled
//! chi variable; the noncentral F CDF by its Poisson mixture of incomplete
//! beta terms.

use std::f64::consts::{PI, SQRT_2};

use crate::quad;
use crate::special::{beta_inc, bisect, erfc, ln_beta, ln_gamma};
use crate::{Result, StatError};

const QUAD_TOL: f64 = 1e-13;

fn check_df(name: &'static str, df: f64) -> Result<()> {
    if df.is_finite() && df > 0.0 {
        Ok(())
    } else {
        Err(StatError::InvalidArgument(format!("{name} must be positive, got {df}")))
    }
}

fn check_prob(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(StatError::InvalidArgument(format!("probability must lie in (0, 1), got {p}")))
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal upper tail `1 - Φ(x)` without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal quantile: Acklam's rational approximation refined by one
/// Halley step.
pub fn normal_quantile(p: f64) -> Result<f64> {
    check_prob(p)?;
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let low = 0.024_25;
    let x = if p < low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    Ok(x - u / (1.0 + 0.5 * x * u))
}

/// Student's t distribution with `df` degrees of freedom.
#[derive(Debug, Clone, Copy)]
pub struct StudentT {
    df: f64,
}

impl StudentT {
    pub fn new(df: f64) -> Result<Self> {
        check_df("degrees of freedom", df)?;
        Ok(Self { df })
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn cdf(&self, t: f64) -> f64 {
        let x = self.df / (self.df + t * t);
        let tail = 0.5 * beta_inc(0.5 * self.df, 0.5, x);
        if t > 0.0 {
            1.0 - tail
        } else {
            tail
        }
    }

    /// Two-sided tail probability `P(|T| >= |t|)`.
    pub fn two_sided_p(&self, t: f64) -> f64 {
        beta_inc(0.5 * self.df, 0.5, self.df / (self.df + t * t))
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_prob(p)?;
        if p == 0.5 {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        while self.cdf(hi) < p.max(1.0 - p) {
            hi *= 2.0;
        }
        Ok(bisect(|t| self.cdf(t), p, -hi, hi))
    }
}

/// Fisher–Snedecor F distribution.
#[derive(Debug, Clone, Copy)]
pub struct FisherF {
    df1: f64,
    df2: f64,
}

impl FisherF {
    pub fn new(df1: f64, df2: f64) -> Result<Self> {
        check_df("numerator df", df1)?;
        check_df("denominator df", df2)?;
        Ok(Self { df1, df2 })
    }

    pub fn cdf(&self, f: f64) -> f64 {
        if f <= 0.0 {
            return 0.0;
        }
        let x = self.df1 * f / (self.df1 * f + self.df2);
        beta_inc(0.5 * self.df1, 0.5 * self.df2, x)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_prob(p)?;
        let mut hi = 1.0;
        while self.cdf(hi) < p {
            hi *= 2.0;
        }
        Ok(bisect(|f| self.cdf(f), p, 0.0, hi))
    }
}

/// Noncentral t distribution with `df` degrees of freedom and noncentrality `delta`.
#[derive(Debug, Clone, Copy)]
pub struct NoncentralT {
    df: f64,
    delta: f64,
}

impl NoncentralT {
    pub fn new(df: f64, delta: f64) -> Result<Self> {
        check_df("degrees of freedom", df)?;
        if !delta.is_finite() {
            return Err(StatError::InvalidArgument("noncentrality must be finite".into()));
        }
        Ok(Self { df, delta })
    }

    /// `P(T <= t)` where `T = (Z + delta) / sqrt(V / df)`.
    ///
    /// Conditions on `S = sqrt(V / df)` and integrates `Φ(t·s − delta)` against
    /// the density of `S`.
    pub fn cdf(&self, t: f64) -> f64 {
        let nu = self.df;
        let half = 0.5 * nu;
        // log density of S at s is ln(2 nu s) + ln f_V(nu s^2). With w = s^2 - 1
        // the s-dependent part is (half - 1)(ln(1 + w) - w) - w, which avoids
        // cancelling terms of size nu: that noise stalls the quadrature.
        let ln_norm = std::f64::consts::LN_2 + nu.ln() - half * std::f64::consts::LN_2 - ln_gamma(half) + (half - 1.0) * nu.ln() - half;
        let density = |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            let w = s * s - 1.0;
            (ln_norm + s.ln() + (half - 1.0) * (w.ln_1p() - w) - w).exp()
        };
        let spread = (2.0 * nu).sqrt();
        let v_lo = (nu - 30.0 * spread).max(0.0);
        let v_hi = nu + 40.0 * spread + 40.0;
        let s_lo = (v_lo / nu).sqrt();
        let s_hi = (v_hi / nu).sqrt();
        let value = quad::integrate(
            |s| density(s) * normal_cdf(t * s - self.delta),
            s_lo,
            s_hi,
            QUAD_TOL,
            48,
        );
        value.clamp(0.0, 1.0)
    }
}

/// Noncentral F distribution with noncentrality `lambda`.
#[derive(Debug, Clone, Copy)]
pub struct NoncentralF {
    df1: f64,
    df2: f64,
    lambda: f64,
}

impl NoncentralF {
    pub fn new(df1: f64, df2: f64, lambda: f64) -> Result<Self> {
        check_df("numerator df", df1)?;
        check_df("denominator df", df2)?;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(StatError::InvalidArgument(format!(
                "noncentrality must be non-negative, got {lambda}"
            )));
        }
        Ok(Self { df1, df2, lambda })
    }

    pub fn cdf(&self, f: f64) -> f64 {
        if f <= 0.0 {
            return 0.0;
        }
        let x = self.df1 * f / (self.df1 * f + self.df2);
        let mu = 0.5 * self.lambda;
        if mu == 0.0 {
            return beta_inc(0.5 * self.df1, 0.5 * self.df2, x);
        }
        let j_max = (mu + 40.0 * mu.sqrt() + 60.0).ceil() as usize;
        let mut sum = 0.0;
        for j in 0..=j_max {
            let jf = j as f64;
            let ln_w = -mu + jf * mu.ln() - ln_gamma(jf + 1.0);
            if ln_w < -745.0 {
                continue;
            }
            sum += ln_w.exp() * beta_inc(0.5 * self.df1 + jf, 0.5 * self.df2, x);
        }
        sum.clamp(0.0, 1.0)
    }
}

/// Density of the central t distribution; exposed for interval and test code.
pub fn student_t_pdf(t: f64, df: f64) -> f64 {
    let ln = -0.5 * (df + 1.0) * (1.0 + t * t / df).ln() - 0.5 * df.ln() - ln_beta(0.5 * df, 0.5);
    ln.exp()
}
