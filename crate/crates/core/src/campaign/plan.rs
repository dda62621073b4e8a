//! Campaign configuration and coverage plan.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AnnotationRecord;
use crate::corpus::{Corpus, CorpusError, TaskDef, Unit};

pub const DEFAULT_CAP: u32 = 60;
pub const DEFAULT_ASSIGNMENT_TTL_SECS: u64 = 24 * 3600;
pub const DEFAULT_TOKEN_TTL_SECS: u64 = 30 * 24 * 3600;
pub const DEFAULT_DOUBLE_PAIRS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub name: String,
    pub seed: u64,
    /// Conversations that need a second, distinct annotator on every task.
    pub double_annotation: Vec<String>,
    pub cap_per_task: u32,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub task_caps: BTreeMap<String, u32>,
    pub assignment_ttl_secs: u64,
    pub token_ttl_secs: u64,
    pub wage_per_hour: f64,
    pub cost_dialogues: usize,
}

impl CampaignConfig {
    /// Default plan with a seeded double-annotation subset of `double_pairs`
    /// session pairs, or `2 * double_pairs` conversations if the corpus has
    /// no pairs.
    pub fn with_defaults(name: &str, corpus: &Corpus, seed: u64, double_pairs: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut subset: Vec<String> = if corpus.pairs().is_empty() {
            let mut ids: Vec<String> = corpus.conversations().iter().map(|c| c.id.clone()).collect();
            ids.shuffle(&mut rng);
            ids.truncate(2 * double_pairs);
            ids
        } else {
            let mut pairs = corpus.pairs().to_vec();
            pairs.shuffle(&mut rng);
            pairs.truncate(double_pairs);
            pairs.into_iter().flat_map(|p| [p.first, p.second]).collect()
        };
        subset.sort();
        Self {
            name: name.into(),
            seed,
            double_annotation: subset,
            cap_per_task: DEFAULT_CAP,
            task_caps: BTreeMap::new(),
            assignment_ttl_secs: DEFAULT_ASSIGNMENT_TTL_SECS,
            token_ttl_secs: DEFAULT_TOKEN_TTL_SECS,
            wage_per_hour: 20.0,
            cost_dialogues: 400,
        }
    }

    pub fn cap(&self, task: &str) -> u32 {
        self.task_caps.get(task).copied().unwrap_or(self.cap_per_task)
    }

    pub fn validate(&self, corpus: &Corpus) -> Result<(), CorpusError> {
        let invalid = |m: String| CorpusError::Invalid { location: "campaign config".into(), message: m };
        if self.cap_per_task < 1 || self.task_caps.values().any(|&c| c < 1) {
            return Err(invalid("caps must be at least 1".into()));
        }
        if let Some(t) = self.task_caps.keys().find(|t| corpus.schema().task(t).is_none()) {
            return Err(invalid(format!("cap for unknown task {t:?}")));
        }
        let mut seen = BTreeSet::new();
        for id in &self.double_annotation {
            if corpus.conversation(id).is_none() {
                return Err(invalid(format!("double-annotation subset names unknown conversation {id:?}")));
            }
            if !seen.insert(id) {
                return Err(invalid(format!("double-annotation subset lists {id:?} twice")));
            }
        }
        if self.assignment_ttl_secs == 0 || self.token_ttl_secs == 0 {
            return Err(invalid("TTLs must be positive".into()));
        }
        if !(self.wage_per_hour.is_finite() && self.wage_per_hour >= 0.0) {
            return Err(invalid("wage must be a non-negative amount".into()));
        }
        Ok(())
    }
}

/// Required annotations per target, in corpus order.
#[derive(Debug, Clone)]
pub struct CoveragePlan {
    demand: BTreeMap<String, BTreeMap<String, u32>>,
    order: BTreeMap<String, Vec<String>>,
}

impl CoveragePlan {
    pub fn new(corpus: &Corpus, config: &CampaignConfig) -> Self {
        let double: BTreeSet<&str> = config.double_annotation.iter().map(String::as_str).collect();
        let mut demand = BTreeMap::new();
        let mut order = BTreeMap::new();
        for task in &corpus.schema().tasks {
            let targets: Vec<(String, u32)> = match task.unit {
                Unit::PerPair => corpus
                    .pairs()
                    .iter()
                    .map(|p| {
                        let twice = double.contains(p.first.as_str()) && double.contains(p.second.as_str());
                        (p.id.clone(), if twice { 2 } else { 1 })
                    })
                    .collect(),
                Unit::PerBotTurn | Unit::PerDialogue => corpus
                    .conversations()
                    .iter()
                    .map(|c| (c.id.clone(), if double.contains(c.id.as_str()) { 2 } else { 1 }))
                    .collect(),
            };
            order.insert(task.key.clone(), targets.iter().map(|(t, _)| t.clone()).collect());
            demand.insert(task.key.clone(), targets.into_iter().collect());
        }
        Self { demand, order }
    }

    pub fn demand(&self, task: &str, target: &str) -> u32 {
        self.demand.get(task).and_then(|m| m.get(target)).copied().unwrap_or(0)
    }

    pub fn targets(&self, task: &TaskDef) -> &[String] {
        self.order.get(&task.key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn total_demand(&self, task: &str) -> u32 {
        self.demand.get(task).map(|m| m.values().sum()).unwrap_or(0)
    }
}

/// Whether a record's target is in the double-annotation subset; a pair
/// counts when both of its conversations are.
pub fn record_target_in(corpus: &Corpus, record: &AnnotationRecord, double: &BTreeSet<&str>) -> bool {
    match (&record.conversation_id, &record.pair_id) {
        (Some(c), _) => double.contains(c.as_str()),
        (None, Some(p)) => corpus.pair(p).is_some_and(|p| double.contains(p.first.as_str()) && double.contains(p.second.as_str())),
        _ => false,
    }
}
