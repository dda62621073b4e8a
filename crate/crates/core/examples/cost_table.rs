//! Cost and throughput per task and per method, from the timings recorded
//! on a simulated campaign and extrapolated to a 400-dialogue study at a
//! given hourly wage.
//!
//! ```text
//! cargo run --release --example cost_table -- 20
//! ```

use std::path::Path;

use abceval::analysis::cost_analysis;
use abceval::synth::{generate_study, simulated_campaign, ScriptedAnnotator, StudyConfig};

pub fn run_example(dir: &Path, wage_per_hour: f64) -> Result<String, Box<dyn std::error::Error>> {
    let study = generate_study(&StudyConfig::four_bots(3))?;
    let annotators: Vec<_> = (1..=3).map(|i| ScriptedAnnotator::exact(&format!("ann{i}"))).collect();
    let sim = simulated_campaign(&dir.join("store"), study, &annotators, 4)?;
    let report = cost_analysis(&sim.store.snapshot(), 400, wage_per_hour);
    let mut out = format!("{:<20} {:>8} {:>9} {:>7} {:>10}\n", "name", "minutes", "per hour", "units", "cost");
    for r in report.tasks.iter().chain(&report.methods) {
        out += &format!("{:<20} {:>8.2} {:>9.1} {:>7} {:>10.2}\n", r.name, r.median_minutes, r.throughput_per_hour, r.units, r.estimated_cost);
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let wage: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(20.0);
    let dir = tempfile::tempdir()?;
    print!("{}", run_example(dir.path(), wage)?);
    Ok(())
}
