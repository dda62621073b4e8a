//! Gold-standard training rounds and the screening verdict.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Conversation, CorpusError, EvaluationSchema, TaskDef};
use crate::metrics::{derive_behavior_labels, validate_payload, Payload, ResponseError, TurnAnswer};

pub const TRAINING_ROUNDS: u8 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldTurn {
    pub turn: usize,
    /// Value of every task label on this bot turn.
    pub labels: BTreeMap<String, bool>,
    pub explanation: String,
}

impl GoldTurn {
    pub fn flagged(&self) -> BTreeSet<String> {
        self.labels.iter().filter(|(_, v)| **v).map(|(k, _)| k.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldConversation {
    pub task_key: String,
    pub round: u8,
    pub conversation: Conversation,
    pub turns: Vec<GoldTurn>,
}

/// Training material for one task: exactly three rounds, the last one
/// being the screening round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldBundle {
    pub task_key: String,
    pub rounds: Vec<GoldConversation>,
}

impl GoldBundle {
    pub fn round(&self, round: u8) -> Option<&GoldConversation> {
        self.rounds.iter().find(|r| r.round == round)
    }

    pub fn validate(&self, schema: &EvaluationSchema) -> Result<(), CorpusError> {
        let invalid = |location: String, message: String| CorpusError::Invalid { location, message };
        let task = schema
            .task(&self.task_key)
            .ok_or_else(|| invalid("gold bundle".into(), format!("unknown task {:?}", self.task_key)))?;
        let rounds: Vec<u8> = self.rounds.iter().map(|r| r.round).collect();
        if rounds != (1..=TRAINING_ROUNDS).collect::<Vec<_>>() {
            return Err(invalid(format!("gold bundle {:?}", self.task_key), format!("rounds must be 1..=3 in order, got {rounds:?}")));
        }
        let need: BTreeSet<&str> = task.labels.iter().map(String::as_str).collect();
        for g in &self.rounds {
            let loc = format!("gold bundle {:?}, round {}", self.task_key, g.round);
            if g.task_key != self.task_key {
                return Err(invalid(loc, format!("round belongs to task {:?}", g.task_key)));
            }
            // reuse corpus validation for the conversation itself
            let mut conv = g.conversation.clone();
            conv.session_pair_id = None;
            crate::corpus::Corpus::new(crate::corpus::CorpusFile { conversations: vec![conv], judgments: vec![] }, schema.clone())
                .map_err(|e| invalid(loc.clone(), e.to_string()))?;
            let bot: BTreeSet<usize> = g.conversation.bot_turn_indices().into_iter().collect();
            let given: BTreeSet<usize> = g.turns.iter().map(|t| t.turn).collect();
            if bot != given || g.turns.len() != bot.len() {
                return Err(invalid(loc, "gold labels must cover every bot turn exactly once".into()));
            }
            for t in &g.turns {
                let have: BTreeSet<&str> = t.labels.keys().map(String::as_str).collect();
                if have != need {
                    return Err(invalid(format!("{loc}, turn {}", t.turn), format!("gold labels must cover exactly {need:?}")));
                }
                if crate::metrics::answer_for_labels(task, &t.flagged()).is_none() {
                    return Err(invalid(format!("{loc}, turn {}", t.turn), "gold label set is not expressible by the widget".into()));
                }
            }
        }
        Ok(())
    }
}

pub fn load_gold_bundle(path: &Path) -> Result<GoldBundle, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
    let mut bundle: GoldBundle = serde_json::from_str(&text).map_err(|e| CorpusError::malformed(path, &e))?;
    for r in &mut bundle.rounds {
        r.conversation.reindex();
    }
    Ok(bundle)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    InProgress,
    Passed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingState {
    pub task_key: String,
    pub completed_rounds: u8,
    /// Mistaken turns per completed round.
    pub mistakes: Vec<u32>,
    pub verdict: Verdict,
}

impl TrainingState {
    pub fn new(task_key: &str) -> Self {
        Self { task_key: task_key.into(), completed_rounds: 0, mistakes: Vec::new(), verdict: Verdict::InProgress }
    }

    pub fn current_round(&self) -> Option<u8> {
        (self.completed_rounds < TRAINING_ROUNDS).then_some(self.completed_rounds + 1)
    }

    /// Records a completed round; the verdict is set only by round 3.
    pub fn record(&mut self, task: &TaskDef, mistakes: u32) {
        self.completed_rounds += 1;
        self.mistakes.push(mistakes);
        if self.completed_rounds == TRAINING_ROUNDS {
            self.verdict = screening_verdict(task, mistakes);
        }
    }
}

/// Verdict from the screening round's mistaken-turn count.
pub fn screening_verdict(task: &TaskDef, round3_mistakes: u32) -> Verdict {
    if task.passes_screening(round3_mistakes) {
        Verdict::Passed
    } else {
        Verdict::Failed
    }
}

/// A training conversation as served to the annotator (no gold labels).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRound {
    pub task_key: String,
    pub round: u8,
    pub conversation: Conversation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disagreement {
    pub turn: usize,
    pub gold: BTreeSet<String>,
    pub given: BTreeSet<String>,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingFeedback {
    pub task_key: String,
    pub round: u8,
    pub mistakes: u32,
    pub disagreements: Vec<Disagreement>,
    pub verdict: Verdict,
}

/// Compares responses with the gold labels; a turn is mistaken when any
/// label differs.
pub fn score_round(task: &TaskDef, gold: &GoldConversation, responses: &[TurnAnswer]) -> Result<Vec<Disagreement>, ResponseError> {
    validate_payload(task, Some(&gold.conversation), &Payload::Turns { responses: responses.to_vec() })?;
    let mut by_turn: BTreeMap<usize, &TurnAnswer> = BTreeMap::new();
    for r in responses {
        by_turn.insert(r.turn, r);
    }
    let mut out = Vec::new();
    for g in &gold.turns {
        let given = derive_behavior_labels(task, &by_turn[&g.turn].answer)?;
        let expected = g.flagged();
        if given != expected {
            out.push(Disagreement { turn: g.turn, gold: expected, given, explanation: g.explanation.clone() });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::builtin_schema;

    #[test]
    fn verdict_only_after_round_three() {
        let s = builtin_schema();
        let task = s.task("antisocial").unwrap();
        let mut st = TrainingState::new("antisocial");
        st.record(task, 9);
        st.record(task, 9);
        assert_eq!(st.verdict, Verdict::InProgress);
        st.record(task, 1);
        assert_eq!(st.verdict, Verdict::Passed);
        assert_eq!(st.current_round(), None);
    }

    #[test]
    fn threshold_matrix() {
        let s = builtin_schema();
        for task in s.tasks.iter().filter(|t| t.method == crate::corpus::Method::AbcEval) {
            let limit = if task.key == "antisocial" || task.key == "uninterpretable" { 2 } else { 3 };
            for m in 0..=5 {
                assert_eq!(screening_verdict(task, m) == Verdict::Passed, m < limit, "{} with {m}", task.key);
            }
        }
    }
}
