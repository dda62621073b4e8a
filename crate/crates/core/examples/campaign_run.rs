//! Drives a campaign through the store API by hand: annotators train on a
//! behavior task, one fails screening, the others label conversations, and
//! the records are exported as JSON Lines.
//!
//! ```text
//! cargo run --example campaign_run -- /tmp/campaign
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use abceval::campaign::{CampaignConfig, CampaignError, Durability, ExportFilter, ManualClock, Store, StoreOptions, Verdict};
use abceval::synth::{generate_study, simulation_epoch, training_answers, StudyConfig};

const TASK: &str = "antisocial";

pub fn run_example(dir: &Path) -> Result<String, Box<dyn std::error::Error>> {
    let study = generate_study(&StudyConfig::four_bots(5))?;
    let config = CampaignConfig::with_defaults("example", &study.corpus, 5, 4);
    let clock = Arc::new(ManualClock::new(simulation_epoch()));
    let options = StoreOptions { durability: Durability::Buffered, clock: clock.clone(), ..Default::default() };
    let store = Store::create(&dir.join("store"), &study.corpus, &config, &study.gold, options)?;
    let def = store.schema().task(TASK).expect("built-in task").clone();
    let gold = study.gold.iter().find(|b| b.task_key == TASK).expect("gold for every behavior task");

    let mut out = String::new();
    // careful annotators make no mistakes; the last one misses two turns per round
    for (id, mistakes) in [("ann1", 0), ("ann2", 0), ("ann3", 2)] {
        store.create_annotator(id, id)?;
        let mut verdict = Verdict::InProgress;
        for round in 1..=3u8 {
            let answers = training_answers(&def, gold.round(round).expect("three rounds"), mistakes);
            verdict = store.submit_training(id, TASK, round, &answers)?.verdict;
        }
        out += &format!("{id}: screening {verdict:?} with {mistakes} mistake(s) per round\n");
    }

    for id in ["ann1", "ann2", "ann3"] {
        let mut done = 0;
        let stop = loop {
            let a = match store.assign(id, TASK) {
                Ok(a) => a,
                Err(e) => break e,
            };
            let target = a.conversation_id.clone().expect("per-conversation task");
            store.submit_annotation(id, &a.id, study.scripted_payload(&def, &target), None)?;
            clock.advance(def.payment_usd * 60.0);
            done += 1;
        };
        let why = match stop {
            CampaignError::TrainingNotPassed(_) => "not allowed",
            CampaignError::CapReached { .. } => "cap reached",
            CampaignError::NothingEligible(_) => "nothing left",
            other => return Err(other.into()),
        };
        out += &format!("{id}: {done} conversations, then {why}\n");
    }

    let export = dir.join("antisocial.jsonl");
    std::fs::write(&export, store.export(&ExportFilter { task: Some(TASK.into()), annotator: None }))?;
    let status = store.status();
    let task = status.tasks.iter().find(|t| t.task_key == TASK).expect("task status");
    out += &format!("{} of {} required records, complete: {}, export at {}\n", task.submitted, task.required, task.complete, export.display());
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("abceval-campaign"));
    if dir.join("store").exists() {
        return Err(format!("{} already holds a store", dir.display()).into());
    }
    print!("{}", run_example(&dir)?);
    Ok(())
}
