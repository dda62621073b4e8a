#![allow(dead_code)]

pub mod build;
pub mod stepwise_oracle;

use std::sync::Arc;

use abceval::campaign::{CampaignConfig, Durability, ManualClock, Store, StoreOptions};
use abceval::service::{spawn_server, ServerHandle};
use abceval::synth::{generate_study, simulation_epoch, StudyConfig, SyntheticStudy};
use reqwest::blocking::{Client, Response};
use serde_json::Value;

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub store: Arc<Store>,
    pub study: SyntheticStudy,
    pub clock: Arc<ManualClock>,
    pub server: ServerHandle,
    pub admin: String,
    pub http: Client,
}

/// Empty campaign over a four-bot study, served on an ephemeral port.
pub fn fixture(seed: u64, double_pairs: usize) -> Fixture {
    fixture_with(StudyConfig::four_bots(seed), double_pairs, |_| {})
}

pub fn fixture_with(study: StudyConfig, double_pairs: usize, tweak: impl FnOnce(&mut CampaignConfig)) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let study = generate_study(&study).unwrap();
    let mut config = CampaignConfig::with_defaults("http", &study.corpus, study.config.seed, double_pairs);
    tweak(&mut config);
    let clock = Arc::new(ManualClock::new(simulation_epoch()));
    let options = StoreOptions { durability: Durability::Buffered, clock: clock.clone(), ..Default::default() };
    let store = Arc::new(Store::create(&dir.path().join("store"), &study.corpus, &config, &study.gold, options).unwrap());
    let admin = store.mint_token(None, None).unwrap().token;
    let server = spawn_server(store.clone(), dir.path().join("reports"), "127.0.0.1:0").unwrap();
    Fixture { dir, store, study, clock, server, admin, http: Client::new() }
}

impl Fixture {
    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.server.base_url())
    }

    pub fn get(&self, path: &str, token: Option<&str>) -> Response {
        let mut r = self.http.get(self.url(path));
        if let Some(t) = token {
            r = r.bearer_auth(t);
        }
        r.send().unwrap()
    }

    pub fn post(&self, path: &str, token: Option<&str>, body: &Value) -> Response {
        let mut r = self.http.post(self.url(path)).json(body);
        if let Some(t) = token {
            r = r.bearer_auth(t);
        }
        r.send().unwrap()
    }

    /// Creates an annotator over the API and returns its token.
    pub fn annotator(&self, id: &str) -> String {
        let r = self.post("/v1/annotators", Some(&self.admin), &serde_json::json!({ "id": id }));
        assert_eq!(r.status(), 201, "create {id}");
        let body: abceval::service::wire::AnnotatorCreated = r.json().unwrap();
        body.token.token
    }
}

/// Status code and JSON error code of a failed response.
pub fn error_of(r: Response) -> (u16, String) {
    let status = r.status().as_u16();
    let body: abceval::service::wire::ErrorBody = r.json().expect("error body is {code, message}");
    (status, body.code)
}

/// Trains one annotator on every task that needs it, answering each round
/// with `mistakes` mistaken turns.
pub fn train_all(f: &Fixture, token: &str, mistakes: usize) {
    for task in f.store.schema().tasks.iter().filter(|t| t.requires_training) {
        let bundle = f.study.gold.iter().find(|b| b.task_key == task.key).expect("gold for every trained task");
        loop {
            let r = f.get(&format!("/v1/training/{}/next", task.key), Some(token));
            if r.status() == 403 {
                break;
            }
            assert_eq!(r.status(), 200, "training next for {}", task.key);
            let step: abceval::campaign::TrainingStep = r.json().unwrap();
            let round = match step {
                abceval::campaign::TrainingStep::Round(r) => r.round,
                abceval::campaign::TrainingStep::Passed { .. } => break,
            };
            let responses = abceval::synth::training_answers(task, bundle.round(round).unwrap(), mistakes);
            let body = serde_json::json!({ "round": round, "responses": responses });
            let r = f.post(&format!("/v1/training/{}/submit", task.key), Some(token), &body);
            assert_eq!(r.status(), 200, "training submit for {}", task.key);
        }
    }
}

/// Requests and submits noise-free work for every task until nothing is
/// eligible. Returns the number of created records.
pub fn work_all(f: &Fixture, token: &str) -> usize {
    let mut created = 0;
    for task in &f.store.schema().tasks {
        loop {
            let r = f.get(&format!("/v1/assignments/next?task={}", task.key), Some(token));
            if r.status() == 409 || r.status() == 403 {
                break;
            }
            assert_eq!(r.status(), 200, "assignment for {}", task.key);
            let a: abceval::campaign::Assignment = r.json().unwrap();
            let target = a.conversation_id.as_deref().or(a.pair_id.as_deref()).unwrap();
            let payload = f.study.scripted_payload(task, target);
            let r = f
                .http
                .post(f.url("/v1/annotations"))
                .bearer_auth(token)
                .header("Idempotency-Key", format!("{}-submit", a.id))
                .json(&serde_json::json!({ "assignment_id": a.id, "payload": payload }))
                .send()
                .unwrap();
            assert_eq!(r.status(), 201, "submit {}", a.id);
            created += 1;
        }
    }
    created
}

/// Creates `n` annotators and drives them concurrently, one thread each.
pub fn drive_campaign(f: &Fixture, n: usize) -> usize {
    let tokens: Vec<String> = (1..=n).map(|i| f.annotator(&format!("ann{i}"))).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = tokens
            .iter()
            .map(|t| {
                s.spawn(move || {
                    train_all(f, t, 0);
                    work_all(f, t)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).sum()
    })
}

/// Starts an analysis and polls it to a terminal state.
pub fn run_analysis(f: &Fixture, options: &Value) -> abceval::service::wire::AnalysisJob {
    let r = f.post("/v1/analyses", Some(&f.admin), options);
    assert_eq!(r.status(), 202);
    let job: abceval::service::wire::AnalysisJob = r.json().unwrap();
    loop {
        let r = f.get(&format!("/v1/analyses/{}", job.id), Some(&f.admin));
        assert_eq!(r.status(), 200);
        let j: abceval::service::wire::AnalysisJob = r.json().unwrap();
        if j.state != abceval::service::wire::JobState::Running {
            return j;
        }
        std::thread::sleep(std::time::Duration::from_millis(20));
    }
}

/// Campaign store without a server.
pub struct Local {
    pub dir: tempfile::TempDir,
    pub store: Store,
    pub study: SyntheticStudy,
    pub clock: Arc<ManualClock>,
}

pub fn local(seed: u64, double_pairs: usize, tweak: impl FnOnce(&mut CampaignConfig)) -> Local {
    let dir = tempfile::tempdir().unwrap();
    let study = generate_study(&StudyConfig::four_bots(seed)).unwrap();
    let mut config = CampaignConfig::with_defaults("local", &study.corpus, seed, double_pairs);
    tweak(&mut config);
    let clock = Arc::new(ManualClock::new(simulation_epoch()));
    let store = Store::create(&dir.path().join("store"), &study.corpus, &config, &study.gold, local_options(&clock)).unwrap();
    Local { dir, store, study, clock }
}

pub fn local_options(clock: &Arc<ManualClock>) -> StoreOptions {
    StoreOptions { durability: Durability::Buffered, clock: clock.clone(), ..Default::default() }
}

impl Local {
    pub fn path(&self) -> std::path::PathBuf {
        self.dir.path().join("store")
    }

    /// Three training rounds answered with `mistakes` wrong turns each.
    pub fn train(&self, annotator: &str, task: &str, mistakes: usize) -> abceval::campaign::Verdict {
        let def = self.store.schema().task(task).unwrap();
        let bundle = self.study.gold.iter().find(|b| b.task_key == task).unwrap();
        let mut verdict = abceval::campaign::Verdict::InProgress;
        for round in 1..=3u8 {
            let answers = abceval::synth::training_answers(def, bundle.round(round).unwrap(), mistakes);
            verdict = self.store.submit_training(annotator, task, round, &answers).unwrap().verdict;
        }
        verdict
    }

    /// Takes and truthfully submits assignments until the store refuses;
    /// returns the submissions made and the refusal.
    pub fn work(&self, annotator: &str, task: &str) -> (usize, abceval::campaign::CampaignError) {
        let def = self.store.schema().task(task).unwrap().clone();
        let mut n = 0;
        loop {
            let a = match self.store.assign(annotator, task) {
                Ok(a) => a,
                Err(e) => return (n, e),
            };
            let target = a.conversation_id.clone().or(a.pair_id.clone()).unwrap();
            self.store.submit_annotation(annotator, &a.id, self.study.scripted_payload(&def, &target), None).unwrap();
            self.clock.advance(1.0);
            n += 1;
        }
    }
}
