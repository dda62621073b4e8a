//! Which labels explain the interactors' own quality judgments? Fits each
//! label alone against the dialogue rating (linear) and the pair preference
//! (logistic) and lists the strongest predictors.
//!
//! ```text
//! cargo run --release --example importance
//! ```

use std::path::Path;

use abceval::analysis::importance_analysis;
use abceval::synth::{generate_study, simulated_campaign, ScriptedAnnotator, StudyConfig};

pub fn run_example(dir: &Path, top: usize) -> Result<String, Box<dyn std::error::Error>> {
    let study = generate_study(&StudyConfig::four_bots(8))?;
    let annotators: Vec<_> = (1..=4).map(|i| ScriptedAnnotator::exact(&format!("ann{i}"))).collect();
    let sim = simulated_campaign(&dir.join("store"), study, &annotators, 8)?;
    let report = importance_analysis(&sim.store.snapshot())?;
    let mut out = format!("{} tied pairs excluded from the {} design\n", report.ties_excluded, report.pair_target);
    for target in [&report.dialogue_target, &report.pair_target] {
        let mut rows: Vec<_> = report.rows.iter().filter(|r| &r.target == target && r.fitness.is_some()).collect();
        rows.sort_by(|a, b| b.fitness.unwrap().total_cmp(&a.fitness.unwrap()));
        out += &format!("{target} ({}):\n", rows.first().map_or("-", |r| r.model.as_str()));
        for r in rows.iter().take(top) {
            out += &format!("  {:<8} fitness {:.3}  coefficient {:+.3}  n {}\n", r.predictor, r.fitness.unwrap(), r.coefficient.unwrap_or(f64::NAN), r.n);
        }
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    print!("{}", run_example(dir.path(), 5)?);
    Ok(())
}
