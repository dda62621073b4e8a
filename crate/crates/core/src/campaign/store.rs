//! File-backed campaign store: an append-only JSON Lines event log plus a
//! derived index, replayed into memory on open.
//!
//! Layout of a store directory:
//!
//! ```text
//! corpus.json     validated corpus (written by `Store::init`)
//! schema.json     evaluation schema
//! campaign.json   campaign config (written by `Store::create_campaign`)
//! gold/<task>.json
//! events.jsonl    one event per line, append-only
//! index.json      {events, bytes} of the last durable append
//! LOCK            held by the one process allowed to mutate
//! ```
//!
//! Every mutation runs under the write lock: validate against the current
//! state, append the event, then apply it. A torn final line (crash during
//! append) is truncated on open, so a reload always reflects a prefix of the
//! operation sequence.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use chrono::{DateTime, Utc};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::plan::{CampaignConfig, CoveragePlan};
use super::record::{export_records, AnnotationRecord, ExportFilter};
use super::training::{score_round, GoldBundle, TrainingFeedback, TrainingRound, TrainingState, Verdict};
use super::{AuthError, CampaignError, Clock, Result, SystemClock};
use crate::corpus::{builtin_schema, Conversation, Corpus, CorpusFile, EvaluationSchema, Method, Unit};
use crate::metrics::{validate_payload, Payload, TurnAnswer};

const EVENTS: &str = "events.jsonl";
const INDEX: &str = "index.json";

pub(crate) fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Durability {
    /// fsync the log and index after every append.
    #[default]
    Fsync,
    /// Leave flushing to the OS; for simulations and tests.
    Buffered,
}

#[derive(Clone)]
pub struct StoreOptions {
    pub durability: Durability,
    pub clock: Arc<dyn Clock>,
    /// Open without the process lock and never write.
    pub read_only: bool,
}

impl Default for StoreOptions {
    fn default() -> Self {
        Self { durability: Durability::Fsync, clock: Arc::new(SystemClock), read_only: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Admin,
    Annotator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    AnnotatorCreated {
        id: String,
        display_name: String,
        at: DateTime<Utc>,
    },
    TokenMinted {
        token_sha256: String,
        role: Role,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        annotator_id: Option<String>,
        issued_at: DateTime<Utc>,
        expires_at: DateTime<Utc>,
    },
    TrainingSubmitted {
        annotator_id: String,
        task_key: String,
        round: u8,
        mistakes: u32,
        at: DateTime<Utc>,
    },
    AssignmentOpened {
        id: String,
        annotator_id: String,
        task_key: String,
        target: String,
        seed: u64,
        opened_at: DateTime<Utc>,
        expires_at: DateTime<Utc>,
    },
    AnnotationSubmitted {
        assignment_id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        idempotency_key: Option<String>,
        record: AnnotationRecord,
    },
    AnnotationImported {
        record: AnnotationRecord,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct LogLine {
    seq: u64,
    #[serde(flatten)]
    event: Event,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct Index {
    events: u64,
    bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotator {
    pub id: String,
    pub display_name: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Principal {
    pub role: Role,
    pub annotator_id: Option<String>,
    pub expires_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MintedToken {
    pub token: String,
    pub role: Role,
    pub annotator_id: Option<String>,
    pub expires_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentState {
    Open,
    Submitted,
    Expired,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct AssignmentRow {
    id: String,
    annotator_id: String,
    task_key: String,
    target: String,
    seed: u64,
    opened_at: DateTime<Utc>,
    expires_at: DateTime<Utc>,
    submitted: bool,
}

impl AssignmentRow {
    fn state(&self, now: DateTime<Utc>) -> AssignmentState {
        if self.submitted {
            AssignmentState::Submitted
        } else if now >= self.expires_at {
            AssignmentState::Expired
        } else {
            AssignmentState::Open
        }
    }
}

/// An assignment together with the conversation(s) to annotate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub id: String,
    pub annotator_id: String,
    pub task_key: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conversation_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
    pub state: AssignmentState,
    pub opened_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
    /// Seed the client may use to order dimensions.
    pub seed: u64,
    /// One conversation, or the pair in first/second order.
    pub conversations: Vec<Conversation>,
}

/// Either the next training conversation or the terminal pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrainingStep {
    Round(TrainingRound),
    Passed { task_key: String, mistakes: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub record: AnnotationRecord,
    /// True when an idempotency key matched an earlier submission.
    pub replayed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskStatus {
    pub task_key: String,
    pub targets: usize,
    pub required: u32,
    pub submitted: usize,
    pub open: usize,
    pub complete: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingCounts {
    pub in_progress: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignStatus {
    pub name: String,
    pub digest: String,
    pub annotators: usize,
    pub events: u64,
    pub records: usize,
    pub tasks: Vec<TaskStatus>,
    pub training: BTreeMap<String, TrainingCounts>,
}

/// Immutable copy of everything the analyses read.
#[derive(Debug, Clone)]
pub struct CampaignSnapshot {
    pub corpus: Arc<Corpus>,
    pub config: CampaignConfig,
    pub records: Vec<AnnotationRecord>,
    pub training: Vec<(String, TrainingState)>,
    pub digest: String,
}

#[derive(Default)]
struct State {
    annotators: BTreeMap<String, Annotator>,
    tokens: HashMap<String, Principal>,
    training: BTreeMap<(String, String), TrainingState>,
    assignments: Vec<AssignmentRow>,
    assignment_index: HashMap<String, usize>,
    records: Vec<AnnotationRecord>,
    /// (task, target) -> annotators with a submitted record.
    done: HashMap<(String, String), Vec<String>>,
    /// (annotator, task) -> submitted count.
    per_annotator: HashMap<(String, String), u32>,
    /// (annotator, idempotency key) -> record position.
    idempotency: HashMap<(String, String), usize>,
    events: u64,
}

impl State {
    fn apply(&mut self, event: &Event, schema: &EvaluationSchema) {
        self.events += 1;
        match event {
            Event::AnnotatorCreated { id, display_name, at } => {
                self.annotators
                    .insert(id.clone(), Annotator { id: id.clone(), display_name: display_name.clone(), created_at: *at });
            }
            Event::TokenMinted { token_sha256, role, annotator_id, expires_at, .. } => {
                self.tokens
                    .insert(token_sha256.clone(), Principal { role: *role, annotator_id: annotator_id.clone(), expires_at: *expires_at });
            }
            Event::TrainingSubmitted { annotator_id, task_key, mistakes, .. } => {
                if let Some(task) = schema.task(task_key) {
                    self.training
                        .entry((annotator_id.clone(), task_key.clone()))
                        .or_insert_with(|| TrainingState::new(task_key))
                        .record(task, *mistakes);
                }
            }
            Event::AssignmentOpened { id, annotator_id, task_key, target, seed, opened_at, expires_at } => {
                self.assignment_index.insert(id.clone(), self.assignments.len());
                self.assignments.push(AssignmentRow {
                    id: id.clone(),
                    annotator_id: annotator_id.clone(),
                    task_key: task_key.clone(),
                    target: target.clone(),
                    seed: *seed,
                    opened_at: *opened_at,
                    expires_at: *expires_at,
                    submitted: false,
                });
            }
            Event::AnnotationSubmitted { assignment_id, idempotency_key, record } => {
                if let Some(&i) = self.assignment_index.get(assignment_id) {
                    self.assignments[i].submitted = true;
                }
                if let Some(key) = idempotency_key {
                    self.idempotency.insert((record.annotator_id.clone(), key.clone()), self.records.len());
                }
                self.add_record(record.clone());
            }
            Event::AnnotationImported { record } => self.add_record(record.clone()),
        }
    }

    fn add_record(&mut self, record: AnnotationRecord) {
        self.done
            .entry((record.task_key.clone(), record.target().to_string()))
            .or_default()
            .push(record.annotator_id.clone());
        *self.per_annotator.entry((record.annotator_id.clone(), record.task_key.clone())).or_insert(0) += 1;
        self.records.push(record);
    }

    fn open_assignment(&self, annotator: &str, task: &str, now: DateTime<Utc>) -> Option<&AssignmentRow> {
        self.assignments
            .iter()
            .rev()
            .find(|a| a.annotator_id == annotator && a.task_key == task && a.state(now) == AssignmentState::Open)
    }
}

struct Inner {
    state: State,
    log: Option<File>,
    bytes: u64,
}

pub struct Store {
    dir: PathBuf,
    corpus: Arc<Corpus>,
    config: CampaignConfig,
    gold: BTreeMap<String, GoldBundle>,
    plan: CoveragePlan,
    digest: String,
    options: StoreOptions,
    inner: RwLock<Inner>,
    _lock: Option<File>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CampaignError + '_ {
    move |e| CampaignError::Io { path: path.display().to_string(), source: e }
}

/// Writes `contents` to `path` via a temporary sibling and rename.
pub(crate) fn write_atomic(path: &Path, contents: &[u8], sync: bool) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let tmp = path.with_extension(format!("{}.tmp", path.extension().and_then(|e| e.to_str()).unwrap_or("")));
    {
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(contents).map_err(io_err(&tmp))?;
        if sync {
            f.sync_all().map_err(io_err(&tmp))?;
        }
    }
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CampaignError::Corrupt(format!("{}: {e}", path.display())))
}

impl Store {
    /// Writes the corpus and schema into a new store directory.
    pub fn init(dir: &Path, corpus: &Corpus) -> Result<()> {
        if dir.join("corpus.json").exists() {
            return Err(CampaignError::AlreadyExists(dir.display().to_string()));
        }
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_atomic(&dir.join("schema.json"), corpus.schema().to_json().as_bytes(), true)?;
        write_atomic(&dir.join("corpus.json"), corpus.to_json().as_bytes(), true)
    }

    pub fn load_corpus(dir: &Path) -> Result<Corpus> {
        let schema_path = dir.join("schema.json");
        let schema = if schema_path.exists() { read_json(&schema_path)? } else { builtin_schema() };
        let file: CorpusFile = read_json(&dir.join("corpus.json"))?;
        Corpus::new(file, schema).map_err(CampaignError::Config)
    }

    /// Writes the campaign config, gold bundles and an empty log.
    pub fn create_campaign(dir: &Path, config: &CampaignConfig, gold: &[GoldBundle]) -> Result<()> {
        let corpus = Self::load_corpus(dir)?;
        config.validate(&corpus).map_err(CampaignError::Config)?;
        for b in gold {
            b.validate(corpus.schema()).map_err(CampaignError::Config)?;
        }
        if dir.join("campaign.json").exists() {
            return Err(CampaignError::AlreadyExists(dir.join("campaign.json").display().to_string()));
        }
        let gold_dir = dir.join("gold");
        std::fs::create_dir_all(&gold_dir).map_err(io_err(&gold_dir))?;
        for b in gold {
            let text = serde_json::to_string_pretty(b).expect("gold serializes") + "\n";
            write_atomic(&gold_dir.join(format!("{}.json", b.task_key)), text.as_bytes(), true)?;
        }
        File::create(dir.join(EVENTS)).map_err(io_err(&dir.join(EVENTS)))?;
        let index = serde_json::to_vec(&Index { events: 0, bytes: 0 }).expect("index serializes");
        write_atomic(&dir.join(INDEX), &index, true)?;
        let text = serde_json::to_string_pretty(config).expect("config serializes") + "\n";
        write_atomic(&dir.join("campaign.json"), text.as_bytes(), true)
    }

    /// Creates and opens a store in one step.
    pub fn create(dir: &Path, corpus: &Corpus, config: &CampaignConfig, gold: &[GoldBundle], options: StoreOptions) -> Result<Self> {
        Self::init(dir, corpus)?;
        Self::create_campaign(dir, config, gold)?;
        Self::open(dir, options)
    }

    pub fn open(dir: &Path, options: StoreOptions) -> Result<Self> {
        if !dir.join("campaign.json").exists() {
            return Err(CampaignError::NotInitialized(dir.display().to_string()));
        }
        let lock = if options.read_only {
            None
        } else {
            let path = dir.join("LOCK");
            let f = File::create(&path).map_err(io_err(&path))?;
            match f.try_lock() {
                Ok(()) => Some(f),
                Err(std::fs::TryLockError::WouldBlock) => return Err(CampaignError::Locked(dir.display().to_string())),
                Err(std::fs::TryLockError::Error(e)) => return Err(io_err(&path)(e)),
            }
        };
        let corpus = Arc::new(Self::load_corpus(dir)?);
        let config: CampaignConfig = read_json(&dir.join("campaign.json"))?;
        config.validate(&corpus).map_err(CampaignError::Config)?;
        let mut gold = BTreeMap::new();
        let gold_dir = dir.join("gold");
        if gold_dir.exists() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(&gold_dir)
                .map_err(io_err(&gold_dir))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            entries.sort();
            for p in entries {
                let mut b: GoldBundle = read_json(&p)?;
                for r in &mut b.rounds {
                    r.conversation.reindex();
                }
                b.validate(corpus.schema()).map_err(CampaignError::Config)?;
                gold.insert(b.task_key.clone(), b);
            }
        }

        let events_path = dir.join(EVENTS);
        let index: Index = read_json(&dir.join(INDEX))?;
        let raw = std::fs::read(&events_path).map_err(io_err(&events_path))?;
        let complete = raw.iter().rposition(|&b| b == b'\n').map(|p| p + 1).unwrap_or(0);
        if (complete as u64) < index.bytes {
            return Err(CampaignError::Corrupt(format!(
                "{} holds {complete} complete bytes but the index records {}",
                events_path.display(),
                index.bytes
            )));
        }
        let mut state = State::default();
        for (i, line) in raw[..complete].split(|&b| b == b'\n').filter(|l| !l.is_empty()).enumerate() {
            let parsed: LogLine = serde_json::from_slice(line)
                .map_err(|e| CampaignError::Corrupt(format!("{} line {}: {e}", events_path.display(), i + 1)))?;
            state.apply(&parsed.event, corpus.schema());
        }
        if state.events < index.events {
            return Err(CampaignError::Corrupt(format!(
                "{} holds {} events but the index records {}",
                events_path.display(),
                state.events,
                index.events
            )));
        }
        let log = if options.read_only {
            None
        } else {
            if complete < raw.len() {
                tracing::warn!(bytes = raw.len() - complete, "truncating torn final log line");
                let f = OpenOptions::new().write(true).open(&events_path).map_err(io_err(&events_path))?;
                f.set_len(complete as u64).map_err(io_err(&events_path))?;
                f.sync_all().map_err(io_err(&events_path))?;
            }
            Some(OpenOptions::new().append(true).open(&events_path).map_err(io_err(&events_path))?)
        };

        let plan = CoveragePlan::new(&corpus, &config);
        let digest = sha256_hex(
            format!(
                "{}\n{}\n{}",
                corpus.digest(),
                corpus.schema().digest(),
                serde_json::to_string(&config).expect("config serializes")
            )
            .as_bytes(),
        );
        Ok(Self {
            dir: dir.to_path_buf(),
            corpus,
            config,
            gold,
            plan,
            digest,
            options,
            inner: RwLock::new(Inner { state, log, bytes: complete as u64 }),
            _lock: lock,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn corpus(&self) -> &Arc<Corpus> {
        &self.corpus
    }

    pub fn schema(&self) -> &EvaluationSchema {
        self.corpus.schema()
    }

    pub fn config(&self) -> &CampaignConfig {
        &self.config
    }

    pub fn plan(&self) -> &CoveragePlan {
        &self.plan
    }

    /// Digest of corpus, schema and campaign config.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.options.clock.now()
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Inner> {
        self.inner.read().unwrap_or_else(|p| p.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, Inner> {
        self.inner.write().unwrap_or_else(|p| p.into_inner())
    }

    fn append(&self, inner: &mut Inner, event: Event) -> Result<()> {
        let Some(log) = inner.log.as_mut() else {
            return Err(CampaignError::ReadOnly);
        };
        let line = LogLine { seq: inner.state.events + 1, event };
        let mut bytes = serde_json::to_vec(&line).expect("event serializes");
        bytes.push(b'\n');
        let path = self.dir.join(EVENTS);
        log.write_all(&bytes).map_err(io_err(&path))?;
        let sync = self.options.durability == Durability::Fsync;
        if sync {
            log.sync_data().map_err(io_err(&path))?;
        }
        inner.bytes += bytes.len() as u64;
        let index = Index { events: inner.state.events + 1, bytes: inner.bytes };
        write_atomic(&self.dir.join(INDEX), &serde_json::to_vec(&index).expect("index serializes"), sync)?;
        inner.state.apply(&line.event, self.corpus.schema());
        Ok(())
    }

    pub fn event_count(&self) -> u64 {
        self.read().state.events
    }

    pub fn create_annotator(&self, id: &str, display_name: &str) -> Result<Annotator> {
        if id.trim().is_empty() || id.len() > 128 {
            return Err(CampaignError::InvalidInput("annotator id must be 1-128 characters".into()));
        }
        let mut inner = self.write();
        if inner.state.annotators.contains_key(id) {
            return Err(CampaignError::DuplicateAnnotator(id.into()));
        }
        let at = self.now();
        self.append(&mut inner, Event::AnnotatorCreated { id: id.into(), display_name: display_name.into(), at })?;
        Ok(inner.state.annotators[id].clone())
    }

    pub fn annotator(&self, id: &str) -> Option<Annotator> {
        self.read().state.annotators.get(id).cloned()
    }

    pub fn annotators(&self) -> Vec<Annotator> {
        self.read().state.annotators.values().cloned().collect()
    }

    /// Mints a bearer token; `annotator = None` mints an admin token.
    pub fn mint_token(&self, annotator: Option<&str>, ttl_secs: Option<u64>) -> Result<MintedToken> {
        let mut inner = self.write();
        if let Some(a) = annotator {
            if !inner.state.annotators.contains_key(a) {
                return Err(CampaignError::UnknownAnnotator(a.into()));
            }
        }
        let mut raw = [0u8; 32];
        rand::rng().fill(&mut raw);
        let token = hex::encode(raw);
        let issued_at = self.now();
        let expires_at = issued_at + chrono::Duration::seconds(ttl_secs.unwrap_or(self.config.token_ttl_secs) as i64);
        let role = if annotator.is_some() { Role::Annotator } else { Role::Admin };
        self.append(
            &mut inner,
            Event::TokenMinted {
                token_sha256: sha256_hex(token.as_bytes()),
                role,
                annotator_id: annotator.map(String::from),
                issued_at,
                expires_at,
            },
        )?;
        Ok(MintedToken { token, role, annotator_id: annotator.map(String::from), expires_at })
    }

    pub fn authenticate(&self, token: &str) -> std::result::Result<Principal, AuthError> {
        let inner = self.read();
        let p = inner.state.tokens.get(&sha256_hex(token.as_bytes())).ok_or(AuthError::UnknownToken)?;
        if self.now() >= p.expires_at {
            return Err(AuthError::Expired);
        }
        Ok(p.clone())
    }

    fn training_task(&self, task: &str) -> Result<&GoldBundle> {
        let def = self.schema().task(task).ok_or_else(|| CampaignError::UnknownTask(task.into()))?;
        if !def.requires_training {
            return Err(CampaignError::NoTraining(task.into()));
        }
        self.gold.get(task).ok_or_else(|| CampaignError::NoTrainingMaterial(task.into()))
    }

    pub fn training_state(&self, annotator: &str, task: &str) -> TrainingState {
        self.read()
            .state
            .training
            .get(&(annotator.to_string(), task.to_string()))
            .cloned()
            .unwrap_or_else(|| TrainingState::new(task))
    }

    pub fn training_states(&self) -> Vec<(String, TrainingState)> {
        self.read().state.training.iter().map(|((a, _), s)| (a.clone(), s.clone())).collect()
    }

    pub fn next_training(&self, annotator: &str, task: &str) -> Result<TrainingStep> {
        let bundle = self.training_task(task)?;
        let inner = self.read();
        if !inner.state.annotators.contains_key(annotator) {
            return Err(CampaignError::UnknownAnnotator(annotator.into()));
        }
        let st = inner.state.training.get(&(annotator.to_string(), task.to_string())).cloned().unwrap_or_else(|| TrainingState::new(task));
        match st.verdict {
            Verdict::Failed => Err(CampaignError::ScreeningFailed(task.into())),
            Verdict::Passed => Ok(TrainingStep::Passed { task_key: task.into(), mistakes: st.mistakes }),
            Verdict::InProgress => {
                let round = st.current_round().expect("in-progress training has a current round");
                let g = bundle.round(round).expect("validated bundle has three rounds");
                Ok(TrainingStep::Round(TrainingRound { task_key: task.into(), round, conversation: g.conversation.clone() }))
            }
        }
    }

    pub fn submit_training(&self, annotator: &str, task: &str, round: u8, responses: &[TurnAnswer]) -> Result<TrainingFeedback> {
        let bundle = self.training_task(task)?;
        let def = self.schema().task(task).expect("checked by training_task");
        let mut inner = self.write();
        if !inner.state.annotators.contains_key(annotator) {
            return Err(CampaignError::UnknownAnnotator(annotator.into()));
        }
        let key = (annotator.to_string(), task.to_string());
        let st = inner.state.training.get(&key).cloned().unwrap_or_else(|| TrainingState::new(task));
        match st.verdict {
            Verdict::Failed => return Err(CampaignError::ScreeningFailed(task.into())),
            Verdict::Passed => return Err(CampaignError::TrainingComplete(task.into())),
            Verdict::InProgress => {}
        }
        let expected = st.current_round().expect("in-progress training has a current round");
        if round != expected {
            return Err(CampaignError::WrongRound { expected, got: round });
        }
        let gold = bundle.round(round).expect("validated bundle has three rounds");
        let disagreements = score_round(def, gold, responses).map_err(CampaignError::InvalidPayload)?;
        let mistakes = disagreements.len() as u32;
        let at = self.now();
        self.append(
            &mut inner,
            Event::TrainingSubmitted { annotator_id: annotator.into(), task_key: task.into(), round, mistakes, at },
        )?;
        let verdict = inner.state.training[&key].verdict;
        Ok(TrainingFeedback { task_key: task.into(), round, mistakes, disagreements, verdict })
    }

    fn view(&self, row: &AssignmentRow, now: DateTime<Utc>) -> Assignment {
        let def = self.schema().task(&row.task_key).expect("assignment task exists");
        let (conversation_id, pair_id, conversations) = if def.unit == Unit::PerPair {
            let p = self.corpus.pair(&row.target).expect("assignment pair exists");
            let convs = [&p.first, &p.second].iter().filter_map(|c| self.corpus.conversation(c).cloned()).collect();
            (None, Some(row.target.clone()), convs)
        } else {
            let c = self.corpus.conversation(&row.target).cloned().into_iter().collect();
            (Some(row.target.clone()), None, c)
        };
        Assignment {
            id: row.id.clone(),
            annotator_id: row.annotator_id.clone(),
            task_key: row.task_key.clone(),
            conversation_id,
            pair_id,
            state: row.state(now),
            opened_at: row.opened_at,
            expires_at: row.expires_at,
            seed: row.seed,
            conversations,
        }
    }

    pub fn assignment(&self, id: &str) -> Option<Assignment> {
        let inner = self.read();
        let now = self.now();
        inner.state.assignment_index.get(id).map(|&i| self.view(&inner.state.assignments[i], now))
    }

    /// Assigns a target using the campaign seed.
    pub fn assign(&self, annotator: &str, task: &str) -> Result<Assignment> {
        self.assign_seeded(annotator, task, self.config.seed)
    }

    /// Uniform choice among eligible targets. The generator is derived from
    /// `seed`, the annotator, the task and the event count, so the same seed
    /// and state always yield the same assignment.
    pub fn assign_seeded(&self, annotator: &str, task: &str, seed: u64) -> Result<Assignment> {
        let def = self.schema().task(task).ok_or_else(|| CampaignError::UnknownTask(task.into()))?;
        let mut inner = self.write();
        let now = self.now();
        let state = &inner.state;
        if !state.annotators.contains_key(annotator) {
            return Err(CampaignError::UnknownAnnotator(annotator.into()));
        }
        if def.requires_training {
            let passed = state
                .training
                .get(&(annotator.to_string(), task.to_string()))
                .is_some_and(|s| s.verdict == Verdict::Passed);
            if !passed {
                return Err(CampaignError::TrainingNotPassed(task.into()));
            }
        }
        if let Some(row) = state.open_assignment(annotator, task, now) {
            return Ok(self.view(row, now));
        }
        let cap = self.config.cap(task);
        let submitted = state.per_annotator.get(&(annotator.to_string(), task.to_string())).copied().unwrap_or(0);
        if submitted >= cap {
            return Err(CampaignError::CapReached { task: task.into(), cap });
        }

        let mut reserved: HashMap<&str, Vec<&str>> = HashMap::new();
        for a in state.assignments.iter().filter(|a| a.task_key == task && a.state(now) == AssignmentState::Open) {
            reserved.entry(a.target.as_str()).or_default().push(a.annotator_id.as_str());
        }
        let eligible: Vec<&String> = self
            .plan
            .targets(def)
            .iter()
            .filter(|t| {
                let done = state.done.get(&(task.to_string(), t.to_string()));
                let held = reserved.get(t.as_str());
                let mine = done.is_some_and(|d| d.iter().any(|a| a == annotator)) || held.is_some_and(|h| h.contains(&annotator));
                let filled = done.map_or(0, Vec::len) + held.map_or(0, Vec::len);
                !mine && (filled as u32) < self.plan.demand(task, t)
            })
            .collect();
        if eligible.is_empty() {
            return Err(CampaignError::NothingEligible(task.into()));
        }
        let material = format!("{seed}\u{1f}{annotator}\u{1f}{task}\u{1f}{}", state.events);
        let digest = Sha256::digest(material.as_bytes());
        let stream = u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 8 bytes"));
        let mut rng = ChaCha8Rng::seed_from_u64(stream);
        let target = eligible[rng.random_range(0..eligible.len())].clone();
        let id = format!("asg-{}", state.events + 1);
        let event = Event::AssignmentOpened {
            id: id.clone(),
            annotator_id: annotator.into(),
            task_key: task.into(),
            target,
            seed: rng.random(),
            opened_at: now,
            expires_at: now + chrono::Duration::seconds(self.config.assignment_ttl_secs as i64),
        };
        self.append(&mut inner, event)?;
        let i = inner.state.assignment_index[&id];
        Ok(self.view(&inner.state.assignments[i], now))
    }

    pub fn submit_annotation(
        &self,
        annotator: &str,
        assignment_id: &str,
        payload: Payload,
        idempotency_key: Option<&str>,
    ) -> Result<Submission> {
        let mut inner = self.write();
        let state = &inner.state;
        if let Some(key) = idempotency_key {
            if let Some(&i) = state.idempotency.get(&(annotator.to_string(), key.to_string())) {
                return Ok(Submission { record: state.records[i].clone(), replayed: true });
            }
        }
        let now = self.now();
        let &i = state
            .assignment_index
            .get(assignment_id)
            .ok_or_else(|| CampaignError::UnknownAssignment(assignment_id.into()))?;
        let row = &state.assignments[i];
        if row.annotator_id != annotator {
            return Err(CampaignError::UnknownAssignment(assignment_id.into()));
        }
        match row.state(now) {
            AssignmentState::Submitted => return Err(CampaignError::AlreadySubmitted(assignment_id.into())),
            AssignmentState::Expired => return Err(CampaignError::AssignmentExpired(assignment_id.into())),
            AssignmentState::Open => {}
        }
        let def = self.schema().task(&row.task_key).expect("assignment task exists");
        let per_pair = def.unit == Unit::PerPair;
        let conversation = if per_pair { None } else { self.corpus.conversation(&row.target) };
        validate_payload(def, conversation, &payload).map_err(CampaignError::InvalidPayload)?;
        let duration = (now - row.opened_at).num_milliseconds().max(0) as f64 / 1000.0;
        let record = AnnotationRecord {
            annotator_id: annotator.into(),
            task_key: row.task_key.clone(),
            conversation_id: (!per_pair).then(|| row.target.clone()),
            pair_id: per_pair.then(|| row.target.clone()),
            payload,
            submitted_at: now,
            duration,
        };
        self.append(
            &mut inner,
            Event::AnnotationSubmitted {
                assignment_id: assignment_id.into(),
                idempotency_key: idempotency_key.map(String::from),
                record: record.clone(),
            },
        )?;
        Ok(Submission { record, replayed: false })
    }

    /// Adds externally collected records (e.g. from an export file). Each is
    /// validated; an annotator may hold one record per (task, target).
    pub fn import_records(&self, records: &[AnnotationRecord]) -> Result<usize> {
        let mut inner = self.write();
        for (i, r) in records.iter().enumerate() {
            let def = self.schema().task(&r.task_key).ok_or_else(|| CampaignError::UnknownTask(r.task_key.clone()))?;
            let loc = |m: String| CampaignError::InvalidInput(format!("record {}: {m}", i + 1));
            let conversation = match def.unit {
                Unit::PerPair => {
                    if r.conversation_id.is_some() || r.pair_id.as_deref().and_then(|p| self.corpus.pair(p)).is_none() {
                        return Err(loc("pair-scoped task needs a known pair_id".into()));
                    }
                    None
                }
                _ => {
                    if r.pair_id.is_some() {
                        return Err(loc("conversation-scoped task must not carry a pair_id".into()));
                    }
                    Some(
                        r.conversation_id
                            .as_deref()
                            .and_then(|c| self.corpus.conversation(c))
                            .ok_or_else(|| loc("unknown conversation_id".into()))?,
                    )
                }
            };
            validate_payload(def, conversation, &r.payload).map_err(|e| loc(e.to_string()))?;
            if !(r.duration.is_finite() && r.duration >= 0.0) {
                return Err(loc("duration must be non-negative".into()));
            }
            let dup = inner
                .state
                .done
                .get(&(r.task_key.clone(), r.target().to_string()))
                .is_some_and(|d| d.contains(&r.annotator_id));
            if dup {
                return Err(loc(format!("{} already annotated {} for {}", r.annotator_id, r.target(), r.task_key)));
            }
            if !inner.state.annotators.contains_key(&r.annotator_id) {
                let at = r.submitted_at;
                self.append(&mut inner, Event::AnnotatorCreated { id: r.annotator_id.clone(), display_name: r.annotator_id.clone(), at })?;
            }
            self.append(&mut inner, Event::AnnotationImported { record: r.clone() })?;
        }
        Ok(records.len())
    }

    pub fn records(&self) -> Vec<AnnotationRecord> {
        self.read().state.records.clone()
    }

    pub fn export(&self, filter: &ExportFilter) -> String {
        export_records(self.read().state.records.iter(), filter, &self.schema().digest())
    }

    pub fn snapshot(&self) -> CampaignSnapshot {
        let inner = self.read();
        CampaignSnapshot {
            corpus: self.corpus.clone(),
            config: self.config.clone(),
            records: inner.state.records.clone(),
            training: inner.state.training.iter().map(|((a, _), s)| (a.clone(), s.clone())).collect(),
            digest: self.digest.clone(),
        }
    }

    pub fn status(&self) -> CampaignStatus {
        let inner = self.read();
        let now = self.now();
        let mut tasks = Vec::new();
        for def in &self.schema().tasks {
            let targets = self.plan.targets(def);
            let submitted = inner.state.records.iter().filter(|r| r.task_key == def.key).count();
            let open = inner.state.assignments.iter().filter(|a| a.task_key == def.key && a.state(now) == AssignmentState::Open).count();
            let complete = targets.iter().all(|t| {
                let have = inner.state.done.get(&(def.key.clone(), t.clone())).map_or(0, Vec::len) as u32;
                have >= self.plan.demand(&def.key, t)
            });
            tasks.push(TaskStatus {
                task_key: def.key.clone(),
                targets: targets.len(),
                required: self.plan.total_demand(&def.key),
                submitted,
                open,
                complete,
            });
        }
        let mut training: BTreeMap<String, TrainingCounts> = BTreeMap::new();
        for def in self.schema().tasks.iter().filter(|t| t.requires_training) {
            training.insert(def.key.clone(), TrainingCounts::default());
        }
        for ((_, task), st) in &inner.state.training {
            let c = training.entry(task.clone()).or_default();
            match st.verdict {
                Verdict::InProgress => c.in_progress += 1,
                Verdict::Passed => c.passed += 1,
                Verdict::Failed => c.failed += 1,
            }
        }
        CampaignStatus {
            name: self.config.name.clone(),
            digest: self.digest.clone(),
            annotators: inner.state.annotators.len(),
            events: inner.state.events,
            records: inner.state.records.len(),
            tasks,
            training,
        }
    }

    /// Tasks an annotator may currently request work for.
    pub fn workable_tasks(&self, annotator: &str) -> Vec<String> {
        let inner = self.read();
        self.schema()
            .tasks
            .iter()
            .filter(|t| {
                !t.requires_training
                    || inner
                        .state
                        .training
                        .get(&(annotator.to_string(), t.key.clone()))
                        .is_some_and(|s| s.verdict == Verdict::Passed)
            })
            .map(|t| t.key.clone())
            .collect()
    }

    pub fn methods(&self) -> Vec<Method> {
        Method::ALL.to_vec()
    }
}
