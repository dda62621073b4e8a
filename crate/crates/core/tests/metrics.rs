//! Metric computation over hand-built corpora.

mod common;

use std::collections::BTreeSet;

use abceval::corpus::{builtin_schema, Choice, Method};
use abceval::metrics::{
    bot_behavior_rate, comparative_rates, derive_behavior_labels, dialogue_behavior_rate, enumerate_answers, likert_metrics,
    Annotations, LikertScope, MetricError, WinTieLoss,
};
use common::build::*;
use proptest::prelude::*;

const UNINT: &str = "!Int_b";

#[test]
fn every_widget_answer_derives_known_labels_and_covers_the_task() {
    let schema = builtin_schema();
    for task in schema.tasks.iter().filter(|t| t.method == Method::AbcEval) {
        let allowed: BTreeSet<String> = task.labels.iter().cloned().collect();
        let mut reached = BTreeSet::new();
        let answers = enumerate_answers(&task.widget);
        assert!(!answers.is_empty(), "{}", task.key);
        for a in &answers {
            let labels = derive_behavior_labels(task, a).unwrap_or_else(|e| panic!("{}: {a:?}: {e}", task.key));
            assert!(labels.is_subset(&allowed), "{}: {labels:?}", task.key);
            reached.extend(labels);
        }
        assert_eq!(reached, allowed, "{}: some label is unreachable", task.key);
    }
}

#[test]
fn dialogue_rate_is_flagged_over_bot_turns() {
    let c = conv("c1", "A", 15, None);
    let corpus = corpus(vec![c.clone()]);
    for (k, expected) in [(3, 0.2), (0, 0.0), (15, 1.0)] {
        let records = vec![record("x", "uninterpretable", "c1", first_k(&c, k), 0)];
        let ann = Annotations::new(&corpus, &records);
        let m = dialogue_behavior_rate(&ann, "c1", UNINT).unwrap();
        assert_eq!(m.value, expected);
        assert_eq!(m.n, 15);
    }
}

#[test]
fn first_submission_is_primary() {
    let c = conv("c1", "A", 10, None);
    let corpus = corpus(vec![c.clone()]);
    let records = vec![record("late", "uninterpretable", "c1", first_k(&c, 9), 50), record("early", "uninterpretable", "c1", first_k(&c, 1), 10)];
    let ann = Annotations::new(&corpus, &records);
    assert_eq!(ann.primary("uninterpretable", "c1").unwrap().annotator_id, "early");
    assert_eq!(dialogue_behavior_rate(&ann, "c1", UNINT).unwrap().value, 0.1);
}

#[test]
fn missing_turn_answer_is_malformed() {
    let c = conv("c1", "A", 4, None);
    let corpus = corpus(vec![c.clone()]);
    let abceval::metrics::Payload::Turns { mut responses } = first_k(&c, 1) else { unreachable!() };
    responses.pop();
    let records = vec![record("x", "uninterpretable", "c1", abceval::metrics::Payload::Turns { responses }, 0)];
    let ann = Annotations::new(&corpus, &records);
    assert!(matches!(dialogue_behavior_rate(&ann, "c1", UNINT), Err(MetricError::Malformed { .. })));
}

#[test]
fn bot_rate_pools_turns_not_dialogue_rates() {
    let cases: [(&[(usize, usize)], f64); 2] = [(&[(2, 10), (4, 10)], 0.30), (&[(1, 10), (3, 30)], 0.10)];
    for (dialogues, expected) in cases {
        let convs: Vec<_> = dialogues.iter().enumerate().map(|(i, &(_, n))| conv(&format!("c{i}"), "A", n, None)).collect();
        let records: Vec<_> =
            convs.iter().zip(dialogues).map(|(c, &(k, _))| record("x", "uninterpretable", &c.id, first_k(c, k), 0)).collect();
        let corpus = corpus(convs);
        let ann = Annotations::new(&corpus, &records);
        let m = bot_behavior_rate(&ann, "A", UNINT, 0.95).unwrap();
        assert!((m.value - expected).abs() < 1e-12, "{dialogues:?}: {}", m.value);
    }
}

#[test]
fn zero_flags_give_a_zero_lower_bound() {
    let convs: Vec<_> = (0..20).map(|i| conv(&format!("c{i}"), "A", 10, None)).collect();
    let records: Vec<_> = convs.iter().map(|c| record("x", "uninterpretable", &c.id, first_k(c, 0), 0)).collect();
    let corpus = corpus(convs);
    let ann = Annotations::new(&corpus, &records);
    let m = bot_behavior_rate(&ann, "A", UNINT, 0.95).unwrap();
    assert_eq!((m.value, m.n), (0.0, 200));
    let ci = m.interval.unwrap();
    assert_eq!(ci.low, 0.0);
    assert!(ci.high > 0.0 && ci.high < 0.03, "{}", ci.high);
}

#[test]
fn unannotated_bot_has_no_rate() {
    let corpus = corpus(vec![conv("c1", "A", 3, None)]);
    let ann = Annotations::new(&corpus, &[]);
    assert!(matches!(bot_behavior_rate(&ann, "A", UNINT, 0.95), Err(MetricError::ZeroTurns { .. })));
}

#[test]
fn dialogue_likert_bot_mean() {
    let convs: Vec<_> = (0..3).map(|i| conv(&format!("c{i}"), "A", 2, None)).collect();
    let records: Vec<_> =
        convs.iter().zip([3u8, 4, 5]).map(|(c, v)| record("x", "dialogue_likert", &c.id, dialogue_ratings(&[("Qua_d", v)]), 0)).collect();
    let corpus = corpus(convs);
    let ann = Annotations::new(&corpus, &records);
    let m = likert_metrics(&ann, "Qua_d", LikertScope::Bot("A"), 0.95).unwrap();
    assert_eq!((m.value, m.n), (4.0, 3));
    let ci = m.interval.unwrap();
    assert!(ci.low < 4.0 && ci.high > 4.0);
    assert!((4.0 - ci.low - (ci.high - 4.0)).abs() < 1e-12, "symmetric about the mean");
}

#[test]
fn turn_likert_dialogue_mean_and_constant_ratings() {
    let c = conv("c1", "A", 4, None);
    let corpus = corpus(vec![c.clone()]);
    let records = vec![record("x", "turn_likert_qua", "c1", turn_ratings(&c, &[2, 2, 4, 4]), 0)];
    let ann = Annotations::new(&corpus, &records);
    let m = likert_metrics(&ann, "Qua_t", LikertScope::Dialogue("c1"), 0.95).unwrap();
    assert_eq!((m.value, m.n), (3.0, 4));

    let records = vec![record("x", "turn_likert_qua", "c1", turn_ratings(&c, &[3, 3, 3, 3]), 0)];
    let ann = Annotations::new(&corpus, &records);
    let ci = likert_metrics(&ann, "Qua_t", LikertScope::Dialogue("c1"), 0.95).unwrap().interval.unwrap();
    assert_eq!((ci.low, ci.high), (3.0, 3.0));
}

fn comparative_fixture(choices: &[Choice]) -> (abceval::corpus::Corpus, Vec<abceval::campaign::AnnotationRecord>) {
    let corpus = corpus(paired("A", "B", choices.len()));
    let records = choices.iter().enumerate().map(|(i, &c)| pair_record("x", &format!("p{i}"), &[("Qua_c", c)], i as i64)).collect();
    (corpus, records)
}

#[test]
fn comparative_win_tie_loss_proportions() {
    let choices: Vec<Choice> =
        [(Choice::First, 20), (Choice::Neither, 4), (Choice::Second, 8)].iter().flat_map(|&(c, n)| std::iter::repeat_n(c, n)).collect();
    let (corpus, records) = comparative_fixture(&choices);
    let ann = Annotations::new(&corpus, &records);
    let m = comparative_rates(&ann, "A", Some("B"), "Qua_c", 0.95).unwrap();
    assert_eq!(m.counts, Some(WinTieLoss { win: 20, tie: 4, loss: 8 }));
    assert_eq!(m.counts.unwrap().rates(), (0.625, 0.125, 0.25));
    assert_eq!(m.value, 0.625);
    let against_all = comparative_rates(&ann, "A", None, "Qua_c", 0.95).unwrap();
    assert_eq!(against_all.counts, m.counts);
}

#[test]
fn all_neither_is_all_ties() {
    let (corpus, records) = comparative_fixture(&[Choice::Neither; 6]);
    let ann = Annotations::new(&corpus, &records);
    let m = comparative_rates(&ann, "A", Some("B"), "Qua_c", 0.95).unwrap();
    assert_eq!(m.counts.unwrap().rates(), (0.0, 1.0, 0.0));
}

#[test]
fn bots_outside_the_pair_are_not_counted() {
    let (corpus, records) = comparative_fixture(&[Choice::First; 3]);
    let ann = Annotations::new(&corpus, &records);
    assert_eq!(comparative_rates(&ann, "A", Some("C"), "Qua_c", 0.95).unwrap().n, 0);
    assert_eq!(comparative_rates(&ann, "C", None, "Qua_c", 0.95).unwrap().n, 0);
}

// single-dialogue metrics carry no interval
fn point(m: &abceval::metrics::MetricValue) -> abceval::metrics::Interval {
    abceval::metrics::Interval { low: m.value, high: m.value, level: 0.95, method: "none" }
}

fn choice() -> impl Strategy<Value = Choice> {
    prop_oneof![Just(Choice::First), Just(Choice::Second), Just(Choice::Neither)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn comparative_counts_mirror(choices in prop::collection::vec(choice(), 1..40)) {
        let (corpus, records) = comparative_fixture(&choices);
        let ann = Annotations::new(&corpus, &records);
        let ab = comparative_rates(&ann, "A", Some("B"), "Qua_c", 0.95).unwrap().counts.unwrap();
        let ba = comparative_rates(&ann, "B", Some("A"), "Qua_c", 0.95).unwrap().counts.unwrap();
        prop_assert_eq!(ab.mirrored(), ba);
        prop_assert_eq!(ab.total() as usize, choices.len());
    }

    #[test]
    fn bot_rate_is_bracketed_and_pools_disjoint_subsets(
        dialogues in prop::collection::vec((1usize..12).prop_flat_map(|n| (0..=n, Just(n))), 2..12),
        split in 1usize..11,
    ) {
        let split = split.min(dialogues.len() - 1);
        let convs: Vec<_> = dialogues.iter().enumerate().map(|(i, &(_, n))| conv(&format!("c{i}"), "A", n, None)).collect();
        let records: Vec<_> = convs.iter().zip(&dialogues).map(|(c, &(k, _))| record("x", "uninterpretable", &c.id, first_k(c, k), 0)).collect();
        let corpus = corpus(convs);
        let all = Annotations::new(&corpus, &records);
        let m = bot_behavior_rate(&all, "A", UNINT, 0.95).unwrap();
        let ci = m.interval.unwrap();
        prop_assert!(ci.low <= m.value && m.value <= ci.high);
        prop_assert!(ci.low >= 0.0 && ci.high <= 1.0);

        let (left, right) = records.split_at(split);
        let (l, r) = (Annotations::new(&corpus, left), Annotations::new(&corpus, right));
        let (ml, mr) = (bot_behavior_rate(&l, "A", UNINT, 0.95).unwrap(), bot_behavior_rate(&r, "A", UNINT, 0.95).unwrap());
        prop_assert_eq!(ml.n + mr.n, m.n);
        let pooled = (ml.value * ml.n as f64 + mr.value * mr.n as f64) / m.n as f64;
        prop_assert!((pooled - m.value).abs() < 1e-12);
    }

    #[test]
    fn likert_bot_metric_ignores_dialogue_order(values in prop::collection::vec(1u8..=5, 1..15), seed in any::<u64>()) {
        let convs: Vec<_> = (0..values.len()).map(|i| conv(&format!("c{i}"), "A", 2, None)).collect();
        let records: Vec<_> = convs.iter().zip(&values).map(|(c, &v)| record("x", "dialogue_likert", &c.id, dialogue_ratings(&[("Eng_d", v)]), 0)).collect();
        let mut shuffled = convs.clone();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        let (c1, c2) = (corpus(convs), corpus(shuffled));
        let m1 = likert_metrics(&Annotations::new(&c1, &records), "Eng_d", LikertScope::Bot("A"), 0.95).unwrap();
        let m2 = likert_metrics(&Annotations::new(&c2, &records), "Eng_d", LikertScope::Bot("A"), 0.95).unwrap();
        prop_assert_eq!((m1.value, m1.n), (m2.value, m2.n));
        let (i1, i2) = (m1.interval.unwrap_or(point(&m1)), m2.interval.unwrap_or(point(&m2)));
        prop_assert!((i1.low - i2.low).abs() < 1e-9 && (i1.high - i2.high).abs() < 1e-9);
    }
}
