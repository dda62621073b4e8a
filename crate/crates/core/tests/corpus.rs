//! Corpus files: parsing, validation messages, summaries and round trips.

mod common;

use std::collections::BTreeSet;
use std::path::Path;

use abceval::corpus::{builtin_schema, corpus_summary, parse_corpus, CorpusError, Speaker};
use abceval::synth::{generate_study, StudyConfig};
use common::build::{conv, corpus};
use proptest::prelude::*;

fn parse(text: &str) -> Result<abceval::corpus::Corpus, CorpusError> {
    parse_corpus(text, Path::new("corpus.json"), builtin_schema())
}

#[test]
fn consecutive_bot_turns_name_conversation_and_turn() {
    let text = r#"{"conversations": [
        {"id": "c7", "bot_id": "b", "interactor_id": "u",
         "turns": [{"speaker": "human", "text": "hi"}, {"speaker": "bot", "text": "hello"}, {"speaker": "bot", "text": "again"}]}
    ]}"#;
    let msg = parse(text).unwrap_err().to_string();
    assert!(msg.contains("\"c7\"") && msg.contains("turn 2"), "{msg}");
}

#[test]
fn malformed_json_reports_position() {
    let err = parse("{\"conversations\": [\n  {\"id\": }\n]}").unwrap_err();
    match err {
        CorpusError::Malformed { path, line, .. } => {
            assert_eq!(path, "corpus.json");
            assert_eq!(line, 2);
        }
        other => panic!("{other}"),
    }
}

#[test]
fn judgments_are_checked_against_the_schema() {
    let base = r#"{"id": "c1", "bot_id": "b", "interactor_id": "u", "turns": [{"speaker": "human", "text": "hi"}, {"speaker": "bot", "text": "yo"}]}"#;
    let bad_rating = format!(r#"{{"conversations": [{base}], "judgments": [{{"conversation_id": "c1", "dialogue_likert": {{"Qua_d": 9}}}}]}}"#);
    assert!(parse(&bad_rating).is_err());
    let good = format!(r#"{{"conversations": [{base}], "judgments": [{{"conversation_id": "c1", "dialogue_likert": {{"Qua_d": 4}}}}]}}"#);
    let c = parse(&good).unwrap();
    assert_eq!(c.judgment_for_conversation("c1").unwrap().dialogue_likert["Qua_d"], 4);
}

#[test]
fn summary_of_a_small_corpus() {
    let c = corpus(vec![conv("a", "A", 2, None), conv("b", "A", 3, None)]);
    let s = corpus_summary(&c);
    assert_eq!(s.dialogues, 2);
    assert_eq!(s.mean_turns, Some(5.0));
    assert_eq!(s.mean_user_turn_tokens, Some(3.0), "\"human line N\"");

    let bots = ["A", "B", "C", "D"];
    let convs = bots.iter().flat_map(|b| (0..3).map(move |i| conv(&format!("{b}{i}"), b, 2, None))).collect();
    let s = corpus_summary(&corpus(convs));
    assert_eq!(s.dialogues, 12);
    assert!(s.per_bot.values().all(|&n| n == 3));
    assert_eq!(s.per_bot.keys().map(String::as_str).collect::<Vec<_>>(), bots);
}

#[test]
fn builtin_task_payments() {
    let schema = builtin_schema();
    let pay = |k: &str| schema.task(k).unwrap().payment_usd;
    assert_eq!(pay("consistency"), 0.87);
    assert_eq!(pay("knowledge"), 1.96);
    assert_eq!(pay("comparative"), 1.43);
}

#[test]
fn schema_json_round_trip() {
    let schema = builtin_schema();
    let text = serde_json::to_string(&schema).unwrap();
    let back: abceval::corpus::EvaluationSchema = serde_json::from_str(&text).unwrap();
    assert_eq!(back, schema);
    assert_eq!(back.digest(), schema.digest());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn generated_corpora_are_well_formed_and_round_trip(seed in any::<u64>(), per_bot in 2usize..8) {
        let mut config = StudyConfig::four_bots(seed);
        config.dialogues_per_bot = per_bot * 2;
        let study = generate_study(&config).unwrap();
        let c = &study.corpus;

        let ids: BTreeSet<&str> = c.conversations().iter().map(|c| c.id.as_str()).collect();
        prop_assert_eq!(ids.len(), c.conversations().len());
        for conv in c.conversations() {
            prop_assert_eq!(conv.turns[0].speaker, Speaker::Human);
            for (i, w) in conv.turns.windows(2).enumerate() {
                prop_assert_ne!(w[0].speaker, w[1].speaker, "{} turn {}", conv.id, i + 1);
            }
            prop_assert!(conv.turns.iter().enumerate().all(|(i, t)| t.index == i));
        }
        for p in c.pairs() {
            prop_assert_ne!(&c.conversation(&p.first).unwrap().bot_id, &c.conversation(&p.second).unwrap().bot_id);
        }

        let text = c.to_json();
        let back = parse(&text).unwrap();
        prop_assert_eq!(back.file(), c.file());
        prop_assert_eq!(back.digest(), c.digest());
        prop_assert_eq!(back.to_json(), text);
    }
}
