//! Power tables for study planning.

use serde::Serialize;
use statkit::{power_f_test, power_t_test};

use super::{csv_string, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    /// `t` (two-sample, n per group) or `f` (regression, total n, df1 = 1).
    pub test: &'static str,
    pub effect: f64,
    pub n: usize,
    pub alpha: f64,
    pub power: f64,
}

pub fn power_report(d_grid: &[f64], f2_grid: &[f64], n_grid: &[usize], alpha: f64) -> Result<Vec<PowerRow>> {
    let mut out = Vec::new();
    for &n in n_grid {
        for &d in d_grid {
            out.push(PowerRow { test: "t", effect: d, n, alpha, power: power_t_test(d, n, alpha)? });
        }
        for &f2 in f2_grid {
            out.push(PowerRow { test: "f", effect: f2, n, alpha, power: power_f_test(f2, n, 1, alpha)? });
        }
    }
    Ok(out)
}

pub(crate) fn power_csv(rows: &[PowerRow]) -> String {
    let rows = rows
        .iter()
        .map(|r| vec![r.test.to_string(), r.effect.to_string(), r.n.to_string(), r.alpha.to_string(), r.power.to_string()])
        .collect();
    csv_string(&["test", "effect", "n", "alpha", "power"], rows)
}
