//! Exhaustive subset search used as the oracle for the beam search.

use std::collections::BTreeMap;

use abceval::analysis::{ModelKind, StepwiseTrace};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statkit::{Aliasing, Matrix};

/// `(mask, fitness, adjusted, all_positive, removed column)` per size.
pub type OracleStep = (u64, f64, f64, bool, Option<usize>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn mask_columns(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask & (1 << i) != 0).collect()
}

/// Best state per size by exhaustive enumeration: highest adjusted fitness,
/// ties to the smaller mask.
pub fn exhaustive_trace(x: &Matrix, y: &[f64], model: ModelKind) -> Option<Vec<OracleStep>> {
    let p = x.cols();
    let fits: BTreeMap<u64, Option<(f64, f64)>> = (0..(1u64 << p))
        .map(|m| {
            let sub = x.select_columns(&mask_columns(m));
            let fit = match model {
                ModelKind::Linear => statkit::ols_fit_with(&sub, y, Aliasing::Drop),
                ModelKind::Logistic => statkit::logistic_fit_with(&sub, y, Aliasing::Drop),
            };
            (m, fit.ok().map(|f| (f.fitness_value(), f.adjusted_fitness())))
        })
        .collect();
    let full = (1u64 << p) - 1;
    fits[&full]?;
    let rank = |a: &u64, b: &u64| fits[b].unwrap().1.total_cmp(&fits[a].unwrap().1).then(a.cmp(b));
    let mut out = Vec::new();
    for size in (1..=p).rev() {
        let mut states: Vec<u64> = fits.keys().copied().filter(|m| m.count_ones() as usize == size && fits[m].is_some()).collect();
        if states.is_empty() {
            break;
        }
        states.sort_by(rank);
        let best = states[0];
        let (fit, adj) = fits[&best].unwrap();
        let all_positive = mask_columns(best).iter().all(|&i| fits[&(best & !(1 << i))].is_none_or(|(_, a)| a < adj));
        let removed = if size == p {
            None
        } else {
            let mut parents: Vec<u64> = (0..p).filter(|i| best & (1 << i) == 0).map(|i| best | (1 << i)).filter(|m| fits[m].is_some()).collect();
            parents.sort_by(rank);
            Some((parents[0] & !best).trailing_zeros() as usize)
        };
        out.push((best, fit, adj, all_positive, removed));
    }
    Some(out)
}

pub fn random_instance(rng: &mut ChaCha8Rng, p: usize, model: ModelKind) -> (Matrix, Vec<f64>) {
    let n = match model {
        ModelKind::Linear => rng.random_range(20..60),
        ModelKind::Logistic => rng.random_range(80..140),
    };
    let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y = rows
        .iter()
        .map(|r| {
            let eta: f64 = r.iter().zip(&beta).map(|(a, b)| a * b).sum();
            match model {
                ModelKind::Linear => eta + rng.random_range(-1.0..1.0),
                ModelKind::Logistic => f64::from(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp())),
            }
        })
        .collect();
    (Matrix::from_rows(&rows), y)
}

pub fn compare_trace(trace: &StepwiseTrace, oracle: &[OracleStep], names: &[String]) -> Result<(), String> {
    ensure(trace.steps.len() == oracle.len(), || format!("{} steps vs {}", trace.steps.len(), oracle.len()))?;
    for (s, (mask, fit, adj, pos, removed)) in trace.steps.iter().zip(oracle) {
        ensure(s.mask == *mask, || format!("size {}: mask {:b} vs {:b}", s.size, s.mask, mask))?;
        ensure((s.fitness - fit).abs() < 1e-12 && (s.adjusted_fitness - adj).abs() < 1e-12, || format!("size {}: fitness differs", s.size))?;
        ensure(s.all_positive == *pos, || format!("size {}: all_positive {}", s.size, s.all_positive))?;
        ensure(s.removed == removed.map(|i| names[i].clone()), || format!("size {}: removed {:?}", s.size, s.removed))?;
    }
    Ok(())
}
