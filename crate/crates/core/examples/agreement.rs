//! Inter-annotator agreement on a simulated campaign where every annotator
//! answers at random on a fraction of the units. Noisier annotators pull
//! alpha down; the BCa interval shows how well the double-annotated subset
//! pins it.
//!
//! ```text
//! cargo run --release --example agreement
//! ```

use std::path::Path;

use abceval::analysis::agreement_analysis;
use abceval::synth::{generate_study, simulated_campaign, ScriptedAnnotator, StudyConfig};

pub fn run_example(dir: &Path, noise: f64) -> Result<String, Box<dyn std::error::Error>> {
    let study = generate_study(&StudyConfig::four_bots(21))?;
    let annotators: Vec<_> =
        (1..=4).map(|i| ScriptedAnnotator { noise, ..ScriptedAnnotator::exact(&format!("ann{i}")) }).collect();
    let sim = simulated_campaign(&dir.join("store"), study, &annotators, 16)?;
    let report = agreement_analysis(&sim.store.snapshot(), 1000, 0.95, 7)?;
    let mut out = format!("noise {noise}: {} double-annotated conversations\n", report.double_annotated);
    for row in &report.rows {
        let value = match (row.alpha, row.ci_low, row.ci_high) {
            (Some(a), Some(lo), Some(hi)) => format!("{a:.3} [{lo:.3}, {hi:.3}]"),
            (Some(a), _, _) => format!("{a:.3}"),
            _ => row.reason.clone().unwrap_or_default(),
        };
        out += &format!("{:<8} {:<8} {value}\n", row.label, row.level);
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let noise: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.1);
    let dir = tempfile::tempdir()?;
    print!("{}", run_example(dir.path(), noise)?);
    Ok(())
}
