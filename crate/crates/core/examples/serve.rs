//! Serves a campaign over HTTP and walks one annotator through it as a
//! client would: create the annotator, pass training, fetch an assignment,
//! submit it, and export. `abceval serve` runs the same server standalone.
//!
//! ```text
//! cargo run --example serve
//! ```

use std::path::Path;
use std::sync::Arc;

use abceval::campaign::{Assignment, CampaignConfig, Durability, Store, StoreOptions, TrainingStep};
use abceval::service::spawn_server;
use abceval::service::wire::AnnotatorCreated;
use abceval::synth::{generate_study, training_answers, StudyConfig};
use reqwest::blocking::Client;
use serde_json::json;

const TASK: &str = "empathy";

pub fn run_example(dir: &Path) -> Result<String, Box<dyn std::error::Error>> {
    let study = generate_study(&StudyConfig::four_bots(2))?;
    let config = CampaignConfig::with_defaults("served", &study.corpus, 2, 4);
    let options = StoreOptions { durability: Durability::Buffered, ..Default::default() };
    let store = Arc::new(Store::create(&dir.join("store"), &study.corpus, &config, &study.gold, options)?);
    let admin = store.mint_token(None, None)?.token;
    let server = spawn_server(store.clone(), dir.join("reports"), "127.0.0.1:0")?;
    let base = server.base_url();
    let http = Client::new();
    let mut out = format!("listening on {base}\n");

    let created: AnnotatorCreated =
        http.post(format!("{base}/v1/annotators")).bearer_auth(&admin).json(&json!({"id": "ann1"})).send()?.error_for_status()?.json()?;
    let token = created.token.token;

    let def = store.schema().task(TASK).expect("built-in task").clone();
    let gold = study.gold.iter().find(|b| b.task_key == TASK).expect("gold bundle");
    loop {
        let step: TrainingStep = http.get(format!("{base}/v1/training/{TASK}/next")).bearer_auth(&token).send()?.error_for_status()?.json()?;
        let TrainingStep::Round(round) = step else { break };
        let responses = training_answers(&def, gold.round(round.round).expect("three rounds"), 0);
        let fb: serde_json::Value = http
            .post(format!("{base}/v1/training/{TASK}/submit"))
            .bearer_auth(&token)
            .json(&json!({"round": round.round, "responses": responses}))
            .send()?
            .error_for_status()?
            .json()?;
        out += &format!("training round {}: {} mistakes, {}\n", round.round, fb["mistakes"], fb["verdict"]);
    }

    let a: Assignment =
        http.get(format!("{base}/v1/assignments/next?task={TASK}")).bearer_auth(&token).send()?.error_for_status()?.json()?;
    let target = a.conversation_id.clone().expect("per-conversation task");
    let body = json!({"assignment_id": a.id, "payload": study.scripted_payload(&def, &target)});
    let first = http.post(format!("{base}/v1/annotations")).bearer_auth(&token).header("Idempotency-Key", "demo-1").json(&body).send()?;
    let again = http.post(format!("{base}/v1/annotations")).bearer_auth(&token).header("Idempotency-Key", "demo-1").json(&body).send()?;
    out += &format!("submitted {} on {target}: {}, retry {}\n", a.id, first.status(), again.status());

    let export = http.get(format!("{base}/v1/export?task={TASK}")).bearer_auth(&admin).send()?.error_for_status()?.text()?;
    out += &format!("export holds {} line(s) including the header\n", export.lines().count());
    drop(server);
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    print!("{}", run_example(dir.path())?);
    Ok(())
}
