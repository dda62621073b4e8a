//! Generates a four-bot synthetic study with planted behavior rates and
//! writes it where the CLI can import it:
//!
//! ```text
//! cargo run --example synthetic_study -- /tmp/study
//! abceval import --corpus /tmp/study/corpus.json --out /tmp/store
//! abceval --store /tmp/store campaign create --gold /tmp/study/gold --double-pairs 16
//! ```

use std::path::{Path, PathBuf};

use abceval::corpus::corpus_summary;
use abceval::synth::{generate_study, write_study, StudyConfig};

pub fn run_example(out: &Path) -> Result<String, Box<dyn std::error::Error>> {
    let config = StudyConfig::four_bots(11);
    let study = generate_study(&config)?;
    write_study(&study, out)?;
    let summary = corpus_summary(&study.corpus);
    let mut report = format!(
        "{} dialogues, {} session pairs, {} gold bundles -> {}\n",
        summary.dialogues,
        study.corpus.pairs().len(),
        study.gold.len(),
        out.display()
    );
    for (label, per_bot) in &config.planted {
        report += &format!("planted {label}: {per_bot:?}\n");
    }
    Ok(report)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("abceval-study"));
    print!("{}", run_example(&out)?);
    Ok(())
}
