//! Dialogue-level and bot-level metrics for every evaluation method.
//!
//! Only one record per (task, target) feeds a metric: the primary record,
//! i.e. the earliest submission with ties broken by annotator id. Agreement
//! analysis is the one consumer that reads every record.

mod response;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use statkit::{student_t_interval, wilson_interval, IntervalEstimate, StatError};

pub use response::{
    answer_for_labels, derive_behavior_labels, enumerate_answers, validate_payload, Acknowledgement, ConsistencyIssue,
    EmpathyChoice, FactResolution, FactUsage, Payload, Relevance, ResponseError, TaskResponse, TopicMove, TurnAnswer,
    TurnRating, WidgetAnswer,
};

use crate::campaign::AnnotationRecord;
use crate::corpus::{Choice, Conversation, Corpus, LabelKind, SessionPair, TaskDef};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("label {label:?} is not a {expected} label")]
    WrongKind { label: String, expected: &'static str },
    #[error("{subject}: no annotation for label {label:?}")]
    NotAnnotated { label: String, subject: String },
    #[error("{subject}: {message}")]
    Malformed { subject: String, message: String },
    #[error("{subject}: no bot turns annotated for {label:?}")]
    ZeroTurns { label: String, subject: String },
    #[error("no observations for {0:?}")]
    Empty(String),
    #[error(transparent)]
    Stat(#[from] StatError),
}

pub type Result<T> = std::result::Result<T, MetricError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Dialogue,
    Bot,
    BotPair,
}

impl Scope {
    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Dialogue => "dialogue",
            Scope::Bot => "bot",
            Scope::BotPair => "bot_pair",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct WinTieLoss {
    pub win: u64,
    pub tie: u64,
    pub loss: u64,
}

impl WinTieLoss {
    pub fn total(&self) -> u64 {
        self.win + self.tie + self.loss
    }

    pub fn rates(&self) -> (f64, f64, f64) {
        let n = self.total().max(1) as f64;
        (self.win as f64 / n, self.tie as f64 / n, self.loss as f64 / n)
    }

    pub fn mirrored(&self) -> Self {
        Self { win: self.loss, tie: self.tie, loss: self.win }
    }
}

/// Serializable interval summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
    pub level: f64,
    pub method: &'static str,
}

impl From<&IntervalEstimate> for Interval {
    fn from(e: &IntervalEstimate) -> Self {
        Self { low: e.low, high: e.high, level: e.level, method: e.method.as_str() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricValue {
    pub label: String,
    pub scope: Scope,
    pub subject: String,
    /// Proportion, mean, or win proportion for pair scope.
    pub value: f64,
    /// Turns, dialogues, or pairs behind `value`.
    pub n: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<WinTieLoss>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<Interval>,
}

/// Records indexed by (task, target) over one corpus.
pub struct Annotations<'a> {
    corpus: &'a Corpus,
    by_target: HashMap<&'a str, HashMap<&'a str, Vec<&'a AnnotationRecord>>>,
}

impl<'a> Annotations<'a> {
    pub fn new(corpus: &'a Corpus, records: &'a [AnnotationRecord]) -> Self {
        let mut by_target: HashMap<&str, HashMap<&str, Vec<&AnnotationRecord>>> = HashMap::new();
        for r in records {
            by_target.entry(r.task_key.as_str()).or_default().entry(r.target()).or_default().push(r);
        }
        for v in by_target.values_mut().flat_map(|m| m.values_mut()) {
            v.sort_by(|a, b| a.submitted_at.cmp(&b.submitted_at).then_with(|| a.annotator_id.cmp(&b.annotator_id)));
        }
        Self { corpus, by_target }
    }

    pub fn corpus(&self) -> &'a Corpus {
        self.corpus
    }

    pub fn all_for(&self, task: &str, target: &str) -> &[&'a AnnotationRecord] {
        self.by_target.get(task).and_then(|m| m.get(target)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn primary(&self, task: &str, target: &str) -> Option<&'a AnnotationRecord> {
        self.all_for(task, target).first().copied()
    }

    fn label_task(&self, label: &str) -> Result<(&'a TaskDef, LabelKind)> {
        let schema = self.corpus.schema();
        let def = schema.label(label).ok_or_else(|| MetricError::UnknownLabel(label.into()))?;
        let task = schema.task_for_label(label).ok_or_else(|| MetricError::UnknownLabel(label.into()))?;
        Ok((task, def.kind))
    }

    fn conversation(&self, id: &str) -> Result<&'a Conversation> {
        self.corpus
            .conversation(id)
            .ok_or_else(|| MetricError::Malformed { subject: id.into(), message: "unknown conversation".into() })
    }
}

/// Behavior label sets per bot turn index for one behavior-task record.
pub fn record_turn_labels(task: &TaskDef, record: &AnnotationRecord) -> Result<BTreeMap<usize, BTreeSet<String>>> {
    let Payload::Turns { responses } = &record.payload else {
        return Err(MetricError::Malformed { subject: record.target().into(), message: "not a per-turn behavior payload".into() });
    };
    responses
        .iter()
        .map(|r| {
            derive_behavior_labels(task, &r.answer)
                .map(|s| (r.turn, s))
                .map_err(|e| MetricError::Malformed { subject: format!("{}, turn {}", record.target(), r.turn), message: e.to_string() })
        })
        .collect()
}

/// Per bot turn: whether `label` is flagged, from the record's responses.
pub fn record_turn_flags(task: &TaskDef, record: &AnnotationRecord, label: &str) -> Result<BTreeMap<usize, bool>> {
    Ok(record_turn_labels(task, record)?.into_iter().map(|(t, s)| (t, s.contains(label))).collect())
}

/// `(flagged, bot turns)` for one conversation's primary record.
pub fn behavior_counts(ann: &Annotations, conversation_id: &str, label: &str) -> Result<(u64, u64)> {
    let (task, kind) = ann.label_task(label)?;
    if kind != LabelKind::BehaviorBinary {
        return Err(MetricError::WrongKind { label: label.into(), expected: "behavior" });
    }
    let conv = ann.conversation(conversation_id)?;
    let record = ann
        .primary(&task.key, conversation_id)
        .ok_or_else(|| MetricError::NotAnnotated { label: label.into(), subject: conversation_id.into() })?;
    let flags = record_turn_flags(task, record, label)?;
    let mut flagged = 0;
    for idx in conv.bot_turn_indices() {
        match flags.get(&idx) {
            Some(true) => flagged += 1,
            Some(false) => {}
            None => {
                return Err(MetricError::Malformed { subject: format!("{conversation_id}, turn {idx}"), message: "missing turn annotation".into() })
            }
        }
    }
    Ok((flagged, conv.bot_turn_count() as u64))
}

/// Flagged bot turns over all bot turns of one conversation.
pub fn dialogue_behavior_rate(ann: &Annotations, conversation_id: &str, label: &str) -> Result<MetricValue> {
    let (k, n) = behavior_counts(ann, conversation_id, label)?;
    Ok(MetricValue {
        label: label.into(),
        scope: Scope::Dialogue,
        subject: conversation_id.into(),
        value: k as f64 / n as f64,
        n,
        counts: None,
        interval: None,
    })
}

/// Turn proportion pooled over every annotated dialogue of `bot`, with a
/// Wilson interval on the pooled counts.
pub fn bot_behavior_rate(ann: &Annotations, bot: &str, label: &str, level: f64) -> Result<MetricValue> {
    let (task, _) = ann.label_task(label)?;
    let (mut k, mut n) = (0u64, 0u64);
    for conv in ann.corpus.conversations().iter().filter(|c| c.bot_id == bot) {
        if ann.primary(&task.key, &conv.id).is_none() {
            continue;
        }
        let (kk, nn) = behavior_counts(ann, &conv.id, label)?;
        k += kk;
        n += nn;
    }
    if n == 0 {
        return Err(MetricError::ZeroTurns { label: label.into(), subject: bot.into() });
    }
    let ci = wilson_interval(k, n, level)?;
    Ok(MetricValue {
        label: label.into(),
        scope: Scope::Bot,
        subject: bot.into(),
        value: k as f64 / n as f64,
        n,
        counts: None,
        interval: Some(Interval::from(&ci)),
    })
}

/// Turn-Likert ratings of one conversation's primary record, in turn order.
pub fn turn_ratings(ann: &Annotations, conversation_id: &str, label: &str) -> Result<Vec<f64>> {
    let (task, kind) = ann.label_task(label)?;
    if kind != LabelKind::LikertTurn {
        return Err(MetricError::WrongKind { label: label.into(), expected: "turn Likert" });
    }
    let record = ann
        .primary(&task.key, conversation_id)
        .ok_or_else(|| MetricError::NotAnnotated { label: label.into(), subject: conversation_id.into() })?;
    let Payload::TurnRatings { ratings } = &record.payload else {
        return Err(MetricError::Malformed { subject: conversation_id.into(), message: "not a turn-rating payload".into() });
    };
    let mut r = ratings.clone();
    r.sort_by_key(|t| t.turn);
    Ok(r.iter().map(|t| t.value as f64).collect())
}

fn dialogue_rating(ann: &Annotations, conversation_id: &str, label: &str) -> Result<f64> {
    let (task, _) = ann.label_task(label)?;
    let record = ann
        .primary(&task.key, conversation_id)
        .ok_or_else(|| MetricError::NotAnnotated { label: label.into(), subject: conversation_id.into() })?;
    match &record.payload {
        Payload::DialogueRatings { ratings } => ratings
            .get(label)
            .map(|&v| v as f64)
            .ok_or_else(|| MetricError::NotAnnotated { label: label.into(), subject: conversation_id.into() }),
        _ => Err(MetricError::Malformed { subject: conversation_id.into(), message: "not a dialogue-rating payload".into() }),
    }
}

/// Dialogue-level value of a non-comparative label: flagged-turn proportion,
/// mean turn rating, or the dialogue rating. `None` when not annotated.
pub fn dialogue_value(ann: &Annotations, conversation_id: &str, label: &str) -> Result<Option<f64>> {
    let (task, kind) = ann.label_task(label)?;
    if ann.primary(&task.key, conversation_id).is_none() {
        return Ok(None);
    }
    match kind {
        LabelKind::BehaviorBinary => dialogue_behavior_rate(ann, conversation_id, label).map(|m| Some(m.value)),
        LabelKind::LikertTurn => {
            let r = turn_ratings(ann, conversation_id, label)?;
            Ok((!r.is_empty()).then(|| r.iter().sum::<f64>() / r.len() as f64))
        }
        LabelKind::LikertDialogue => dialogue_rating(ann, conversation_id, label).map(Some),
        LabelKind::Comparative => Err(MetricError::WrongKind { label: label.into(), expected: "dialogue-scoped" }),
    }
}

#[derive(Debug, Clone, Copy)]
pub enum LikertScope<'s> {
    Dialogue(&'s str),
    Bot(&'s str),
}

/// Likert metric for one dialogue or one bot. Bot scope: dialogue Likert is
/// the mean over dialogues; turn Likert is the mean over all pooled turns.
/// Intervals are Student t at `level` when there are two or more values.
pub fn likert_metrics(ann: &Annotations, label: &str, scope: LikertScope, level: f64) -> Result<MetricValue> {
    let (task, kind) = ann.label_task(label)?;
    let values: Vec<f64> = match (kind, scope) {
        (LabelKind::LikertDialogue, LikertScope::Dialogue(c)) => vec![dialogue_rating(ann, c, label)?],
        (LabelKind::LikertTurn, LikertScope::Dialogue(c)) => turn_ratings(ann, c, label)?,
        (LabelKind::LikertDialogue | LabelKind::LikertTurn, LikertScope::Bot(bot)) => {
            let mut v = Vec::new();
            for conv in ann.corpus.conversations().iter().filter(|c| c.bot_id == bot) {
                if ann.primary(&task.key, &conv.id).is_none() {
                    continue;
                }
                if kind == LabelKind::LikertDialogue {
                    v.push(dialogue_rating(ann, &conv.id, label)?);
                } else {
                    v.extend(turn_ratings(ann, &conv.id, label)?);
                }
            }
            v
        }
        _ => return Err(MetricError::WrongKind { label: label.into(), expected: "Likert" }),
    };
    if values.is_empty() {
        return Err(MetricError::Empty(label.into()));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let (scope_kind, subject) = match scope {
        LikertScope::Dialogue(c) => (Scope::Dialogue, c),
        LikertScope::Bot(b) => (Scope::Bot, b),
    };
    let interval = if values.len() >= 2 { Some(Interval::from(&student_t_interval(&values, level)?)) } else { None };
    Ok(MetricValue {
        label: label.into(),
        scope: scope_kind,
        subject: subject.into(),
        value: mean,
        n: values.len() as u64,
        counts: None,
        interval,
    })
}

/// Comparative choice for one pair from its primary record.
pub fn pair_choice(ann: &Annotations, pair_id: &str, label: &str) -> Result<Option<Choice>> {
    let (task, kind) = ann.label_task(label)?;
    if kind != LabelKind::Comparative {
        return Err(MetricError::WrongKind { label: label.into(), expected: "comparative" });
    }
    let Some(record) = ann.primary(&task.key, pair_id) else { return Ok(None) };
    match &record.payload {
        Payload::PairChoices { choices } => Ok(choices.get(label).copied()),
        _ => Err(MetricError::Malformed { subject: pair_id.into(), message: "not a pair-choice payload".into() }),
    }
}

fn bots_of<'c>(ann: &Annotations<'c>, pair: &SessionPair) -> Result<(&'c str, &'c str)> {
    let a = ann.conversation(&pair.first)?;
    let b = ann.conversation(&pair.second)?;
    Ok((a.bot_id.as_str(), b.bot_id.as_str()))
}

/// Win/tie/loss of `bot_a` on `label`, over pairs against `bot_b`, or over
/// every pair involving `bot_a` when `bot_b` is `None`. Wilson interval on
/// the win proportion.
pub fn comparative_rates(ann: &Annotations, bot_a: &str, bot_b: Option<&str>, label: &str, level: f64) -> Result<MetricValue> {
    let mut wtl = WinTieLoss::default();
    for pair in ann.corpus.pairs() {
        let (first_bot, second_bot) = bots_of(ann, pair)?;
        let a_is_first = match (first_bot == bot_a, second_bot == bot_a) {
            (true, false) => true,
            (false, true) => false,
            _ => continue,
        };
        let other = if a_is_first { second_bot } else { first_bot };
        if bot_b.is_some_and(|b| b != other) {
            continue;
        }
        let Some(choice) = pair_choice(ann, &pair.id, label)? else { continue };
        match (choice, a_is_first) {
            (Choice::Neither, _) => wtl.tie += 1,
            (Choice::First, true) | (Choice::Second, false) => wtl.win += 1,
            _ => wtl.loss += 1,
        }
    }
    let n = wtl.total();
    let interval = if n > 0 { Some(Interval::from(&wilson_interval(wtl.win, n, level)?)) } else { None };
    let subject = match bot_b {
        Some(b) => format!("{bot_a} vs {b}"),
        None => format!("{bot_a} vs all"),
    };
    Ok(MetricValue {
        label: label.into(),
        scope: Scope::BotPair,
        subject,
        value: wtl.rates().0,
        n,
        counts: Some(wtl),
        interval,
    })
}

/// Bot-level value of every label for every bot (comparative: against all).
/// Labels with no data for a bot are skipped.
pub fn bot_metric_table(ann: &Annotations, level: f64) -> Vec<MetricValue> {
    let mut out = Vec::new();
    for bot in ann.corpus.bots() {
        for def in &ann.corpus.schema().labels {
            let m = match def.kind {
                LabelKind::BehaviorBinary => bot_behavior_rate(ann, &bot, &def.key, level),
                LabelKind::LikertTurn | LabelKind::LikertDialogue => likert_metrics(ann, &def.key, LikertScope::Bot(&bot), level),
                LabelKind::Comparative => comparative_rates(ann, &bot, None, &def.key, level).and_then(|m| {
                    if m.n == 0 {
                        Err(MetricError::Empty(def.key.clone()))
                    } else {
                        Ok(m)
                    }
                }),
            };
            if let Ok(m) = m {
                out.push(m);
            }
        }
    }
    out
}

/// CSV with columns `label,scope,subject,value,n,ci_low,ci_high,method`.
pub fn metric_table_csv(values: &[MetricValue]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "scope", "subject", "value", "n", "ci_low", "ci_high", "method"]).expect("in-memory write");
    for m in values {
        let (lo, hi, method) = match &m.interval {
            Some(i) => (i.low.to_string(), i.high.to_string(), i.method.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        w.write_record([m.label.clone(), m.scope.as_str().into(), m.subject.clone(), m.value.to_string(), m.n.to_string(), lo, hi, method])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}
