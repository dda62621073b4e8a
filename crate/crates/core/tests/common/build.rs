//! Hand-built corpora and records for metric and analysis tests.

use std::collections::BTreeMap;

use abceval::campaign::AnnotationRecord;
use abceval::corpus::{builtin_schema, Choice, Conversation, Corpus, CorpusFile, Speaker, Turn};
use abceval::metrics::{Payload, TurnAnswer, TurnRating, WidgetAnswer};
use chrono::{DateTime, TimeZone, Utc};

/// Alternating turns opening with the human, `bot_turns` of them bot turns.
pub fn conv(id: &str, bot: &str, bot_turns: usize, pair: Option<&str>) -> Conversation {
    let mut turns = Vec::new();
    for i in 0..bot_turns {
        turns.push(Turn::new(2 * i, Speaker::Human, format!("human line {i}")));
        turns.push(Turn::new(2 * i + 1, Speaker::Bot, format!("bot line {i}")));
    }
    Conversation { id: id.into(), bot_id: bot.into(), interactor_id: format!("u-{id}"), session_pair_id: pair.map(Into::into), turns }
}

pub fn corpus(conversations: Vec<Conversation>) -> Corpus {
    Corpus::new(CorpusFile { conversations, judgments: Vec::new() }, builtin_schema()).unwrap()
}

pub fn at(secs: i64) -> DateTime<Utc> {
    Utc.timestamp_opt(1_700_000_000 + secs, 0).unwrap()
}

pub fn record(annotator: &str, task: &str, conversation: &str, payload: Payload, secs: i64) -> AnnotationRecord {
    AnnotationRecord {
        annotator_id: annotator.into(),
        task_key: task.into(),
        conversation_id: Some(conversation.into()),
        pair_id: None,
        payload,
        submitted_at: at(secs),
        duration: 30.0,
    }
}

pub fn pair_record(annotator: &str, pair: &str, choices: &[(&str, Choice)], secs: i64) -> AnnotationRecord {
    AnnotationRecord {
        annotator_id: annotator.into(),
        task_key: "comparative".into(),
        conversation_id: None,
        pair_id: Some(pair.into()),
        payload: Payload::PairChoices { choices: choices.iter().map(|(k, c)| (k.to_string(), *c)).collect() },
        submitted_at: at(secs),
        duration: 30.0,
    }
}

/// Checkbox answers for every bot turn; `flagged[i]` checks the i-th bot turn.
pub fn checkboxes(c: &Conversation, flagged: impl Fn(usize) -> bool) -> Payload {
    Payload::Turns {
        responses: c
            .bot_turn_indices()
            .into_iter()
            .enumerate()
            .map(|(i, turn)| TurnAnswer { turn, answer: WidgetAnswer::Checkbox { checked: flagged(i) } })
            .collect(),
    }
}

pub fn first_k(c: &Conversation, k: usize) -> Payload {
    checkboxes(c, |i| i < k)
}

pub fn turn_ratings(c: &Conversation, values: &[u8]) -> Payload {
    let ratings = c.bot_turn_indices().into_iter().zip(values).map(|(turn, &value)| TurnRating { turn, value }).collect();
    Payload::TurnRatings { ratings }
}

pub fn dialogue_ratings(values: &[(&str, u8)]) -> Payload {
    Payload::DialogueRatings { ratings: values.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>() }
}

/// `n` paired sessions of `a` (first) against `b` (second).
pub fn paired(a: &str, b: &str, n: usize) -> Vec<Conversation> {
    (0..n)
        .flat_map(|i| {
            let pid = format!("p{i}");
            [conv(&format!("p{i}a"), a, 3, Some(&pid)), conv(&format!("p{i}b"), b, 3, Some(&pid))]
        })
        .collect()
}

pub fn corpus_with(conversations: Vec<Conversation>, judgments: Vec<abceval::corpus::InteractorJudgment>) -> Corpus {
    Corpus::new(CorpusFile { conversations, judgments }, builtin_schema()).unwrap()
}

pub fn pair_judgment(pair: &str, label: &str, choice: Choice) -> abceval::corpus::InteractorJudgment {
    abceval::corpus::InteractorJudgment {
        conversation_id: None,
        pair_id: Some(pair.into()),
        dialogue_likert: BTreeMap::new(),
        comparative: [(label.to_string(), choice)].into_iter().collect(),
    }
}

/// Snapshot over `corpus` with `double` as the double-annotated subset.
pub fn snapshot(corpus: Corpus, records: Vec<AnnotationRecord>, double: Vec<String>) -> abceval::campaign::CampaignSnapshot {
    let mut config = abceval::campaign::CampaignConfig::with_defaults("hand", &corpus, 0, 0);
    config.double_annotation = double;
    abceval::campaign::CampaignSnapshot { corpus: std::sync::Arc::new(corpus), config, records, training: Vec::new(), digest: String::new() }
}
