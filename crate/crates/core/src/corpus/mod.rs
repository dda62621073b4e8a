//! Conversation corpus, interactor judgments, and the evaluation schema.
//!
//! A [`Corpus`] is validated once at construction and immutable afterwards.

mod schema;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use schema::{
    builtin_schema, load_schema, EvaluationSchema, LabelDef, LabelKind, Method, Polarity, TaskDef, Unit, Widget,
    DEFAULT_SCREENING_THRESHOLD, DIMENSIONS, LIKERT_MAX, LIKERT_MIN, QUALITY_DIMENSION,
};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}:{column}: malformed file: {message}")]
    Malformed { path: String, line: usize, column: usize, message: String },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
}

impl CorpusError {
    pub(crate) fn malformed(path: &Path, e: &serde_json::Error) -> Self {
        CorpusError::Malformed { path: path.display().to_string(), line: e.line(), column: e.column(), message: e.to_string() }
    }

    fn invalid(location: impl Into<String>, message: impl Into<String>) -> Self {
        CorpusError::Invalid { location: location.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Human,
    Bot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    /// Position in the conversation; implied by order in the file.
    #[serde(skip)]
    pub index: usize,
    pub speaker: Speaker,
    pub text: String,
}

impl Turn {
    pub fn new(index: usize, speaker: Speaker, text: impl Into<String>) -> Self {
        Self { index, speaker, text: text.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conversation {
    pub id: String,
    pub bot_id: String,
    pub interactor_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_pair_id: Option<String>,
    pub turns: Vec<Turn>,
}

impl Conversation {
    pub fn bot_turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(|t| t.speaker == Speaker::Bot)
    }

    pub fn bot_turn_indices(&self) -> Vec<usize> {
        self.bot_turns().map(|t| t.index).collect()
    }

    pub fn bot_turn_count(&self) -> usize {
        self.bot_turns().count()
    }

    /// Restores `Turn::index` from file order after deserializing.
    pub fn reindex(&mut self) {
        for (i, t) in self.turns.iter_mut().enumerate() {
            t.index = i;
        }
    }
}

/// Choice in a side-by-side comparison; `First`/`Second` follow pair order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    First,
    Second,
    Neither,
}

impl Choice {
    pub fn swapped(self) -> Self {
        match self {
            Choice::First => Choice::Second,
            Choice::Second => Choice::First,
            Choice::Neither => Choice::Neither,
        }
    }
}

/// Interactor's own judgments: dialogue Likert for one conversation, or
/// comparative choices for one session pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractorJudgment {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conversation_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
    /// Dialogue Likert label key (e.g. `Qua_d`) to rating.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dialogue_likert: BTreeMap<String, u8>,
    /// Comparative label key (e.g. `Qua_c`) to choice.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub comparative: BTreeMap<String, Choice>,
}

/// On-disk corpus document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusFile {
    pub conversations: Vec<Conversation>,
    #[serde(default)]
    pub judgments: Vec<InteractorJudgment>,
}

/// Two conversations of one interactor session, in file order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionPair {
    pub id: String,
    pub first: String,
    pub second: String,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    file: CorpusFile,
    schema: EvaluationSchema,
    by_id: HashMap<String, usize>,
    pairs: Vec<SessionPair>,
    pair_index: HashMap<String, usize>,
}

impl Corpus {
    /// Validates every corpus invariant, failing on the first violation.
    pub fn new(mut file: CorpusFile, schema: EvaluationSchema) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::new();
        for (ci, conv) in file.conversations.iter_mut().enumerate() {
            let loc = format!("conversation {:?}", conv.id);
            if conv.id.is_empty() {
                return Err(CorpusError::invalid(format!("conversations[{ci}]"), "empty conversation id"));
            }
            if by_id.insert(conv.id.clone(), ci).is_some() {
                return Err(CorpusError::invalid(loc, "duplicate conversation id"));
            }
            if conv.bot_id.is_empty() || conv.interactor_id.is_empty() {
                return Err(CorpusError::invalid(loc, "bot_id and interactor_id must be non-empty"));
            }
            if conv.turns.len() < 2 {
                return Err(CorpusError::invalid(loc, format!("needs at least 2 turns, has {}", conv.turns.len())));
            }
            for i in 0..conv.turns.len() {
                conv.turns[i].index = i;
                let turn = &conv.turns[i];
                if turn.text.trim().is_empty() {
                    return Err(CorpusError::invalid(format!("{loc}, turn {i}"), "turn text is empty"));
                }
                if i > 0 && conv.turns[i - 1].speaker == turn.speaker {
                    return Err(CorpusError::invalid(
                        format!("{loc}, turn {i}"),
                        format!("speaker {:?} follows another {:?} turn", turn.speaker, turn.speaker),
                    ));
                }
            }
            if conv.bot_turn_count() == 0 {
                return Err(CorpusError::invalid(loc, "conversation has no bot turn"));
            }
        }

        let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
        let mut group_index: HashMap<String, usize> = HashMap::new();
        for (ci, conv) in file.conversations.iter().enumerate() {
            if let Some(pid) = &conv.session_pair_id {
                let gi = *group_index.entry(pid.clone()).or_insert_with(|| {
                    groups.push((pid.clone(), Vec::new()));
                    groups.len() - 1
                });
                groups[gi].1.push(ci);
            }
        }
        let mut pairs = Vec::new();
        for (pid, members) in groups {
            let loc = format!("session pair {pid:?}");
            if members.len() != 2 {
                return Err(CorpusError::invalid(loc, format!("has {} conversations, expected 2", members.len())));
            }
            let (a, b) = (&file.conversations[members[0]], &file.conversations[members[1]]);
            if a.bot_id == b.bot_id {
                return Err(CorpusError::invalid(loc, format!("both conversations use bot {:?}", a.bot_id)));
            }
            pairs.push(SessionPair { id: pid, first: a.id.clone(), second: b.id.clone() });
        }
        let pair_index: HashMap<String, usize> = pairs.iter().enumerate().map(|(i, p)| (p.id.clone(), i)).collect();

        let mut seen_conv = HashSet::new();
        let mut seen_pair = HashSet::new();
        for (ji, j) in file.judgments.iter().enumerate() {
            let loc = format!("judgments[{ji}]");
            match (&j.conversation_id, &j.pair_id) {
                (Some(cid), None) => {
                    if !by_id.contains_key(cid) {
                        return Err(CorpusError::invalid(loc, format!("unknown conversation {cid:?}")));
                    }
                    if !j.comparative.is_empty() {
                        return Err(CorpusError::invalid(loc, "comparative choices need a pair-scoped judgment"));
                    }
                    if !seen_conv.insert(cid.clone()) {
                        return Err(CorpusError::invalid(loc, format!("second judgment for conversation {cid:?}")));
                    }
                }
                (None, Some(pid)) => {
                    if !pair_index.contains_key(pid) {
                        return Err(CorpusError::invalid(loc, format!("unknown session pair {pid:?}")));
                    }
                    if !j.dialogue_likert.is_empty() {
                        return Err(CorpusError::invalid(loc, "dialogue Likert ratings need a conversation-scoped judgment"));
                    }
                    if !seen_pair.insert(pid.clone()) {
                        return Err(CorpusError::invalid(loc, format!("second judgment for pair {pid:?}")));
                    }
                }
                _ => return Err(CorpusError::invalid(loc, "exactly one of conversation_id and pair_id is required")),
            }
            for (key, &value) in &j.dialogue_likert {
                match schema.label(key) {
                    Some(l) if l.kind == LabelKind::LikertDialogue => {}
                    _ => return Err(CorpusError::invalid(&loc, format!("{key:?} is not a dialogue Likert label"))),
                }
                if !(LIKERT_MIN..=LIKERT_MAX).contains(&value) {
                    return Err(CorpusError::invalid(
                        format!("{loc}, {key}"),
                        format!("Likert value {value} outside {LIKERT_MIN}..{LIKERT_MAX}"),
                    ));
                }
            }
            for key in j.comparative.keys() {
                match schema.label(key) {
                    Some(l) if l.kind == LabelKind::Comparative => {}
                    _ => return Err(CorpusError::invalid(&loc, format!("{key:?} is not a comparative label"))),
                }
            }
        }

        Ok(Self { file, schema, by_id, pairs, pair_index })
    }

    pub fn empty(schema: EvaluationSchema) -> Self {
        Self::new(CorpusFile::default(), schema).expect("empty corpus is valid")
    }

    pub fn schema(&self) -> &EvaluationSchema {
        &self.schema
    }

    pub fn conversations(&self) -> &[Conversation] {
        &self.file.conversations
    }

    pub fn judgments(&self) -> &[InteractorJudgment] {
        &self.file.judgments
    }

    pub fn conversation(&self, id: &str) -> Option<&Conversation> {
        self.by_id.get(id).map(|&i| &self.file.conversations[i])
    }

    pub fn pairs(&self) -> &[SessionPair] {
        &self.pairs
    }

    pub fn pair(&self, id: &str) -> Option<&SessionPair> {
        self.pair_index.get(id).map(|&i| &self.pairs[i])
    }

    /// Sorted distinct bot ids.
    pub fn bots(&self) -> Vec<String> {
        let mut bots: Vec<String> = self.file.conversations.iter().map(|c| c.bot_id.clone()).collect();
        bots.sort();
        bots.dedup();
        bots
    }

    pub fn judgment_for_conversation(&self, id: &str) -> Option<&InteractorJudgment> {
        self.file.judgments.iter().find(|j| j.conversation_id.as_deref() == Some(id))
    }

    pub fn judgment_for_pair(&self, id: &str) -> Option<&InteractorJudgment> {
        self.file.judgments.iter().find(|j| j.pair_id.as_deref() == Some(id))
    }

    pub fn file(&self) -> &CorpusFile {
        &self.file
    }

    /// Canonical JSON form of the corpus file.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.file).expect("corpus serializes");
        s.push('\n');
        s
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(&self.file).expect("corpus serializes")))
    }
}

pub fn parse_corpus(text: &str, path: &Path, schema: EvaluationSchema) -> Result<Corpus, CorpusError> {
    let file: CorpusFile = serde_json::from_str(text).map_err(|e| CorpusError::malformed(path, &e))?;
    Corpus::new(file, schema)
}

/// Reads and validates a corpus file against the builtin schema.
pub fn import_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    import_corpus_with(path, builtin_schema())
}

pub fn import_corpus_with(path: &Path, schema: EvaluationSchema) -> Result<Corpus, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
    parse_corpus(&text, path, schema)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub dialogues: usize,
    pub per_bot: BTreeMap<String, usize>,
    pub mean_turns: Option<f64>,
    /// Whitespace tokens per human turn.
    pub mean_user_turn_tokens: Option<f64>,
}

pub fn corpus_summary(corpus: &Corpus) -> CorpusSummary {
    let convs = corpus.conversations();
    let mut per_bot = BTreeMap::new();
    for c in convs {
        *per_bot.entry(c.bot_id.clone()).or_insert(0) += 1;
    }
    let turns: usize = convs.iter().map(|c| c.turns.len()).sum();
    let human: Vec<usize> = convs
        .iter()
        .flat_map(|c| c.turns.iter())
        .filter(|t| t.speaker == Speaker::Human)
        .map(|t| t.text.split_whitespace().count())
        .collect();
    CorpusSummary {
        dialogues: convs.len(),
        per_bot,
        mean_turns: (!convs.is_empty()).then(|| turns as f64 / convs.len() as f64),
        mean_user_turn_tokens: (!human.is_empty()).then(|| human.iter().sum::<usize>() as f64 / human.len() as f64),
    }
}
