//! Can each label tell the bots apart? Downsamples every bot to the same
//! number of dialogues, tests all bot pairs and counts significant pairs at
//! three alpha levels. The synthetic study plants rate differences on two
//! behavior labels, which should be the ones that separate bots.
//!
//! ```text
//! cargo run --release --example sensitivity
//! ```

use std::path::Path;

use abceval::analysis::{sensitivity_analysis, DEFAULT_ALPHAS};
use abceval::synth::{generate_study, simulated_campaign, ScriptedAnnotator, StudyConfig};

pub fn run_example(dir: &Path) -> Result<String, Box<dyn std::error::Error>> {
    let study = generate_study(&StudyConfig::four_bots(13))?;
    let planted: Vec<String> = study.config.planted.keys().cloned().collect();
    let annotators: Vec<_> = (1..=4).map(|i| ScriptedAnnotator::exact(&format!("ann{i}"))).collect();
    let sim = simulated_campaign(&dir.join("store"), study, &annotators, 8)?;
    let report = sensitivity_analysis(&sim.store.snapshot(), 32, 13, &DEFAULT_ALPHAS)?;
    let mut out = format!("significant bot pairs (of 6) at alpha {:?}\n", report.alphas);
    for row in report.rows.iter().filter(|r| r.counts.iter().any(|&c| c > 0) || planted.contains(&r.label)) {
        let mark = if planted.contains(&row.label) { " planted" } else { "" };
        out += &format!("{:<8} {:?}{mark}\n", row.label, row.counts);
        for (a, b) in row.significant(0.05) {
            out += &format!("    {a} vs {b}\n");
        }
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    print!("{}", run_example(dir.path())?);
    Ok(())
}
