//! Runs every analysis on a simulated campaign and writes the report
//! bundle: one CSV and one SVG per report plus a manifest of digests.
//! Running it twice with the same seed gives byte-identical files.
//!
//! ```text
//! cargo run --release --example report_bundle -- /tmp/reports
//! ```

use std::path::{Path, PathBuf};

use abceval::analysis::{run_analyses, write_bundle, AnalysisOptions};
use abceval::synth::{generate_study, simulated_campaign, ScriptedAnnotator, StudyConfig};

pub fn run_example(work: &Path, out: &Path, seed: u64) -> Result<String, Box<dyn std::error::Error>> {
    let study = generate_study(&StudyConfig::four_bots(seed))?;
    let annotators: Vec<_> = (1..=4).map(|i| ScriptedAnnotator { noise: 0.05, ..ScriptedAnnotator::exact(&format!("ann{i}")) }).collect();
    let sim = simulated_campaign(&work.join("store"), study, &annotators, 8)?;
    let snapshot = sim.store.snapshot();
    let options = AnalysisOptions { seed, bootstrap_resamples: 1000, ..Default::default() };
    let results = run_analyses(&snapshot, &options)?;
    let manifest = write_bundle(&snapshot, &options, &results, out)?;
    let mut report = format!("bundle for campaign {} at {}\n", manifest.campaign, out.display());
    for (file, digest) in &manifest.files {
        report += &format!("  {file:<28} {}\n", &digest[..16]);
    }
    Ok(report)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("abceval-reports"));
    let work = tempfile::tempdir()?;
    print!("{}", run_example(work.path(), &out, 7)?);
    Ok(())
}
