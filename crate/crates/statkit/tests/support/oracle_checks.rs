//! Oracle checks shared by the statkit tests and the workspace acceptance
//! run. Each check panics on the first mismatch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statkit::dist::{normal_cdf, FisherF, NoncentralF, NoncentralT, StudentT};
use statkit::*;

fn gauss_jordan(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        for c in 0..n {
            a[col][c] /= d;
        }
        b[col] /= d;
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                for c in 0..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    b
}

pub fn ols_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..10 {
        let rows: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 0.5 + 1.5 * r[0] - 2.0 * r[1] + 0.25 * r[2] + rng.random_range(-1.0..1.0))
            .collect();
        let fit = ols_fit(&Matrix::from_rows(&rows), &y).unwrap();

        let design: Vec<Vec<f64>> = rows.iter().map(|r| [vec![1.0], r.clone()].concat()).collect();
        let mut xtx = vec![vec![0.0; 4]; 4];
        let mut xty = vec![0.0; 4];
        for (r, yi) in design.iter().zip(&y) {
            for i in 0..4 {
                xty[i] += r[i] * yi;
                for j in 0..4 {
                    xtx[i][j] += r[i] * r[j];
                }
            }
        }
        let oracle = gauss_jordan(xtx, xty);
        for (a, b) in fit.coefficients.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        // r2 by definition
        let mean = y.iter().sum::<f64>() / 20.0;
        let ssr: f64 = design
            .iter()
            .zip(&y)
            .map(|(r, yi)| (yi - r.iter().zip(&oracle).map(|(a, b)| a * b).sum::<f64>()).powi(2))
            .sum();
        let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        assert!((fit.fitness_value() - (1.0 - ssr / sst)).abs() < 1e-10);
        let adj = 1.0 - (1.0 - fit.fitness_value()) * 19.0 / 16.0;
        assert!((fit.adjusted_fitness() - adj).abs() < 1e-12);
    }
}

fn logistic_ll(x: &[f64], y: &[f64], b0: f64, b1: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(xi, yi)| {
            let p = 1.0 / (1.0 + (-(b0 + b1 * xi)).exp());
            yi * p.ln() + (1.0 - yi) * (1.0 - p).ln()
        })
        .sum()
}

pub fn logistic_matches_grid_search_mle() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let x: Vec<f64> = (0..40).map(|_| rng.random_range(-3.0..3.0)).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|xi| {
            let p = 1.0 / (1.0 + (-(0.3 + 0.9 * xi)).exp());
            if rng.random::<f64>() < p {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let fit = logistic_fit(&Matrix::from_columns(&[x.clone()]), &y).unwrap();
    assert!(fit.converged);

    // coarse-to-fine grid over (intercept, slope)
    let (mut c0, mut c1, mut step) = (0.0, 0.0, 0.1);
    let mut half = 50;
    for _ in 0..5 {
        let mut best = (f64::NEG_INFINITY, c0, c1);
        for i in -half..=half {
            for j in -half..=half {
                let b0 = c0 + i as f64 * step;
                let b1 = c1 + j as f64 * step;
                let ll = logistic_ll(&x, &y, b0, b1);
                if ll > best.0 {
                    best = (ll, b0, b1);
                }
            }
        }
        c0 = best.1;
        c1 = best.2;
        step /= 10.0;
        half = 20;
    }
    assert!((fit.intercept() - c0).abs() < 1e-3, "{} vs {c0}", fit.intercept());
    assert!((fit.slope(0) - c1).abs() < 1e-3, "{} vs {c1}", fit.slope(0));

    let ll = logistic_ll(&x, &y, fit.intercept(), fit.slope(0));
    let ybar = y.iter().sum::<f64>() / 40.0;
    let ll0 = 40.0 * (ybar * ybar.ln() + (1.0 - ybar) * (1.0 - ybar).ln());
    match fit.fitness {
        Fitness::Logistic { loglik, null_loglik, mcfadden, adjusted_mcfadden } => {
            assert!((loglik - ll).abs() < 1e-9);
            assert!((null_loglik - ll0).abs() < 1e-9);
            assert!((mcfadden - (1.0 - ll / ll0)).abs() < 1e-9);
            assert!((adjusted_mcfadden - (1.0 - (ll - 1.0) / ll0)).abs() < 1e-9);
        }
        _ => panic!("expected logistic fitness"),
    }
}

/// Canonical alpha by explicit pair enumeration: within-unit pairs for D_o,
/// all pairs of pairable values for D_e.
fn alpha_by_pairs(table: &[Vec<Option<f64>>], interval: bool) -> f64 {
    let delta = |a: f64, b: f64| if interval { (a - b).powi(2) } else if a == b { 0.0 } else { 1.0 };
    let mut pooled = Vec::new();
    let mut d_o = 0.0;
    for unit in table {
        let vals: Vec<f64> = unit.iter().flatten().copied().collect();
        if vals.len() < 2 {
            continue;
        }
        let m = vals.len() as f64;
        for i in 0..vals.len() {
            for j in 0..vals.len() {
                if i != j {
                    d_o += delta(vals[i], vals[j]) / (m - 1.0);
                }
            }
        }
        pooled.extend(vals);
    }
    let n = pooled.len() as f64;
    let mut d_e = 0.0;
    for i in 0..pooled.len() {
        for j in 0..pooled.len() {
            if i != j {
                d_e += delta(pooled[i], pooled[j]);
            }
        }
    }
    1.0 - (d_o / n) / (d_e / (n * (n - 1.0)))
}

fn reliability(table: &[Vec<Option<f64>>], level: Level) -> ReliabilityData {
    let mut d = ReliabilityData::new(level);
    for (u, unit) in table.iter().enumerate() {
        for (c, v) in unit.iter().enumerate() {
            if let Some(v) = v {
                d.insert(format!("u{u}"), format!("c{c}"), *v);
            }
        }
    }
    d
}

pub fn alpha_three_coders_with_missing_cells() {
    let n = None;
    let s = Some;
    let table = vec![
        vec![s(1.0), s(1.0), n],
        vec![s(0.0), s(1.0), s(0.0)],
        vec![s(0.0), s(0.0), s(0.0)],
        vec![n, s(1.0), s(1.0)],
        vec![s(1.0), n, n],
        vec![s(2.0), s(2.0), s(1.0)],
        vec![s(0.0), n, s(0.0)],
        vec![s(2.0), s(2.0), s(2.0)],
    ];
    let got = krippendorff_alpha(&reliability(&table, Level::Nominal)).unwrap();
    let want = alpha_by_pairs(&table, false);
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    let got = krippendorff_alpha(&reliability(&table, Level::Interval)).unwrap();
    let want = alpha_by_pairs(&table, true);
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");
}

pub fn alpha_published_reference_example() {
    // Four observers, twelve units; published nominal 0.743, interval 0.849.
    let n = None;
    let s = Some;
    let coders = [
        [s(1.0), s(2.0), s(3.0), s(3.0), s(2.0), s(1.0), s(4.0), s(1.0), s(2.0), n, n, n],
        [s(1.0), s(2.0), s(3.0), s(3.0), s(2.0), s(2.0), s(4.0), s(1.0), s(2.0), s(5.0), n, s(3.0)],
        [n, s(3.0), s(3.0), s(3.0), s(2.0), s(3.0), s(4.0), s(2.0), s(2.0), s(5.0), s(1.0), n],
        [s(1.0), s(2.0), s(3.0), s(3.0), s(2.0), s(4.0), s(4.0), s(1.0), s(2.0), s(5.0), s(1.0), n],
    ];
    let table: Vec<Vec<Option<f64>>> = (0..12).map(|u| coders.iter().map(|c| c[u]).collect()).collect();
    let nominal = krippendorff_alpha(&reliability(&table, Level::Nominal)).unwrap();
    let interval = krippendorff_alpha(&reliability(&table, Level::Interval)).unwrap();
    assert!((nominal - 0.743).abs() < 5e-4, "{nominal}");
    assert!((interval - 0.849).abs() < 5e-4, "{interval}");
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn sign_test_matches_binomial_sums() {
    let r = sign_test(8, 2, 0).unwrap();
    assert!((r.p_value - 112.0 / 1024.0).abs() < 1e-15);
    for (w, l) in [(3u64, 9u64), (12, 5), (0, 6), (20, 14), (1, 1)] {
        let n = w + l;
        let k = w.min(l);
        let tail: f64 = (0..=k).map(|i| binomial(n, i)).sum::<f64>() / 2f64.powi(n as i32);
        let want = (2.0 * tail).min(1.0);
        let got = sign_test(w, l, 7).unwrap().p_value;
        assert!((got - want).abs() < 1e-13, "({w},{l}) {got} vs {want}");
        assert_eq!(got, sign_test(l, w, 0).unwrap().p_value);
    }
}

pub fn two_proportion_z_direct_formula() {
    let r = two_prop_z_test(15, 100, 5, 100).unwrap();
    let pooled: f64 = 0.10;
    let z = (0.15 - 0.05) / (pooled * (1.0 - pooled) * (2.0 / 100.0)).sqrt();
    assert!((r.statistic - z).abs() < 1e-12);
    assert!((r.statistic - 2.357).abs() < 1e-3);
    assert!((r.p_value - 2.0 * (1.0 - normal_cdf(z))).abs() < 1e-12);
    assert!((r.p_value - 0.0184).abs() < 1e-4);
}

pub fn welch_matches_hand_evaluation() {
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let b = [2.0, 3.0, 4.0, 5.0, 6.0];
    let r = t_test(&a, &b).unwrap();
    // means 3 and 4, variances 2.5 each: t = -1 / sqrt(0.5 + 0.5), df = 8
    assert!((r.statistic + 1.0).abs() < 1e-12);
    assert!((r.df.unwrap() - 8.0).abs() < 1e-12);
    let want = 2.0 * StudentT::new(8.0).unwrap().cdf(-1.0);
    assert!((r.p_value - want).abs() < 1e-12);
    assert!((r.p_value - 0.346_593_507_087_334_16).abs() < 1e-9);
}

pub fn wilson_matches_closed_form() {
    let z = 1.959964f64;
    let w = wilson_interval(0, 50, 0.95).unwrap();
    assert_eq!(w.low, 0.0);
    let want = z * z / (50.0 + z * z);
    assert!((w.high - want).abs() < 1e-6, "{} vs {want}", w.high);
    for (k, n) in [(3u64, 17u64), (10, 10), (40, 200), (1, 2)] {
        let w = wilson_interval(k, n, 0.95).unwrap();
        let p = k as f64 / n as f64;
        let nf = n as f64;
        let centre = (p + z * z / (2.0 * nf)) / (1.0 + z * z / nf);
        let half = z / (1.0 + z * z / nf) * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt();
        assert!(((centre - half).max(0.0) - w.low).abs() < 1e-6);
        assert!(((centre + half).min(1.0) - w.high).abs() < 1e-6);
        assert!(w.contains(p));
    }
}

pub fn student_t_interval_hand_evaluation() {
    let ci = student_t_interval(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.95).unwrap();
    let half = 2.7764 * (2.5f64 / 5.0).sqrt();
    assert!((ci.point - 3.0).abs() < 1e-12);
    assert!((ci.low - (3.0 - half)).abs() < 1e-4);
    assert!((ci.high - (3.0 + half)).abs() < 1e-4);
}

pub fn distribution_spot_checks() {
    let mut reader = csv::Reader::from_reader(include_str!("../fixtures/distributions.csv").as_bytes());
    let mut seen = std::collections::BTreeMap::<String, usize>::new();
    for row in reader.records() {
        let row = row.unwrap();
        let dist = &row[0];
        let params: Vec<f64> = row[1].split(';').filter(|s| !s.is_empty()).map(|s| s.parse().unwrap()).collect();
        let x: f64 = row[2].parse().unwrap();
        let expected: f64 = row[3].parse().unwrap();
        let got = match dist {
            "normal" => normal_cdf(x),
            "t" => StudentT::new(params[0]).unwrap().cdf(x),
            "noncentral_t" => NoncentralT::new(params[0], params[1]).unwrap().cdf(x),
            "f" => FisherF::new(params[0], params[1]).unwrap().cdf(x),
            "noncentral_f" => NoncentralF::new(params[0], params[1], params[2]).unwrap().cdf(x),
            other => panic!("unknown distribution {other}"),
        };
        assert!((got - expected).abs() < 1e-6, "{dist}({:?}) at {x}: {got} vs {expected}", params);
        *seen.entry(dist.to_string()).or_default() += 1;
    }
    assert_eq!(seen.len(), 5);
    assert!(seen.values().all(|&c| c == 10), "{seen:?}");
}

pub fn published_power_values() {
    let t = power_t_test(0.40, 100, 0.05).unwrap();
    assert!((t - 0.80).abs() <= 0.02, "{t}");
    let f = power_f_test(0.14 * 0.14, 400, 1, 0.05).unwrap();
    assert!((f - 0.80).abs() <= 0.02, "{f}");
}

/// Box-Muller draw.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn mean(xs: &[&f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().copied().sum::<f64>() / xs.len() as f64)
}

/// Share of 95% BCa intervals for the mean of N(2, 1) samples (n = 30)
/// that contain 2.
pub fn bca_mean_coverage(datasets: u64) -> f64 {
    let true_mean = 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut covered = 0;
    for i in 0..datasets {
        let data: Vec<f64> = (0..30).map(|_| true_mean + standard_normal(&mut rng)).collect();
        let ci = bootstrap_bca(&data, mean, 1000, 0.95, 10_000 + i).unwrap();
        if ci.contains(true_mean) {
            covered += 1;
        }
    }
    covered as f64 / datasets as f64
}
