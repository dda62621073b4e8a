//! Analyses over hand-built snapshots: agreement, importance, sensitivity,
//! stepwise selection, cost, power and pass rates.

mod common;

use abceval::analysis::{
    agreement_analysis, comparative_design, cost_analysis, importance_analysis, power_report, sensitivity_analysis, stepwise_search,
    training_pass_rates, univariate_fit, ModelKind,
};
use abceval::campaign::{AnnotationRecord, CampaignSnapshot, TrainingState, Verdict};
use abceval::corpus::{Choice, Conversation};
use common::build::*;
use common::stepwise_oracle::{compare_trace, exhaustive_trace, random_instance};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statkit::Matrix;

const UNINT: &str = "!Int_b";

fn convs(bot: &str, n: usize, turns: usize) -> Vec<Conversation> {
    (0..n).map(|i| conv(&format!("{bot}-{i}"), bot, turns, None)).collect()
}

/// Uninterpretable-task records where `flag(conversation index, bot turn)` decides each checkbox.
fn flagged_records(annotator: &str, convs: &[Conversation], flag: impl Fn(usize, usize) -> bool) -> Vec<AnnotationRecord> {
    convs.iter().enumerate().map(|(ci, c)| record(annotator, "uninterpretable", &c.id, checkboxes(c, |t| flag(ci, t)), ci as i64)).collect()
}

fn ids(convs: &[Conversation]) -> Vec<String> {
    convs.iter().map(|c| c.id.clone()).collect()
}

mod agreement {
    use super::*;

    fn doubled(flags_b: impl Fn(usize, usize) -> bool) -> CampaignSnapshot {
        let cs = convs("A", 10, 5);
        let mut records = flagged_records("ann-a", &cs, |c, t| (c + t) % 3 == 0);
        records.extend(flagged_records("ann-b", &cs, flags_b));
        let double = ids(&cs);
        snapshot(corpus(cs), records, double)
    }

    #[test]
    fn duplicated_annotators_agree_perfectly() {
        let report = agreement_analysis(&doubled(|c, t| (c + t) % 3 == 0), 1000, 0.95, 1).unwrap();
        let row = report.rows.iter().find(|r| r.label == UNINT).unwrap();
        assert_eq!(row.alpha, Some(1.0));
        assert_eq!((row.units, row.cases), (50, 10));
        assert_eq!(report.double_annotated, 10);
    }

    #[test]
    fn labels_without_overlap_carry_a_reason() {
        let cs = convs("A", 6, 4);
        let snap = snapshot(corpus(cs.clone()), flagged_records("ann-a", &cs, |_, t| t == 0), ids(&cs));
        let report = agreement_analysis(&snap, 1000, 0.95, 1).unwrap();
        assert_eq!(report.rows.len(), 40);
        for row in &report.rows {
            assert_eq!(row.alpha, None, "{}", row.label);
            assert_eq!(row.reason.as_deref(), Some("no overlap"), "{}", row.label);
        }
    }

    #[test]
    fn constant_codes_are_undefined_not_perfect() {
        let report = agreement_analysis(&doubled_constant(), 1000, 0.95, 1).unwrap();
        let row = report.rows.iter().find(|r| r.label == UNINT).unwrap();
        assert_eq!(row.alpha, None);
        assert!(row.reason.as_deref().unwrap().starts_with("undefined"), "{:?}", row.reason);
    }

    fn doubled_constant() -> CampaignSnapshot {
        let cs = convs("A", 5, 3);
        let mut records = flagged_records("ann-a", &cs, |_, _| false);
        records.extend(flagged_records("ann-b", &cs, |_, _| false));
        let double = ids(&cs);
        snapshot(corpus(cs), records, double)
    }

    #[test]
    fn records_outside_the_double_set_are_ignored() {
        let mut snap = doubled(|c, t| (c * t) % 2 == 1);
        snap.config.double_annotation.clear();
        let report = agreement_analysis(&snap, 1000, 0.95, 1).unwrap();
        assert!(report.rows.iter().all(|r| r.reason.as_deref() == Some("no overlap")));
    }

    #[test]
    fn seeded_runs_are_identical() {
        let snap = doubled(|c, t| (c * t) % 2 == 1);
        let a = agreement_analysis(&snap, 1000, 0.95, 9).unwrap();
        let b = agreement_analysis(&snap, 1000, 0.95, 9).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn renaming_annotators_and_reordering_records_changes_nothing(
            flips in prop::collection::vec(any::<bool>(), 40),
            order in Just(()).prop_perturb(|_, mut rng| rng.random::<u64>()),
        ) {
            let snap = doubled(|c, t| ((c + t) % 3 == 0) ^ flips[c * 4 + t % 4]);
            let mut renamed = snap.clone();
            for r in &mut renamed.records {
                r.annotator_id = if r.annotator_id == "ann-a" { "zed".into() } else { "amy".into() };
            }
            let mut rng = ChaCha8Rng::seed_from_u64(order);
            rand::seq::SliceRandom::shuffle(renamed.records.as_mut_slice(), &mut rng);
            let a = agreement_analysis(&snap, 1000, 0.95, 3).unwrap();
            let b = agreement_analysis(&renamed, 1000, 0.95, 3).unwrap();
            for (x, y) in a.rows.iter().zip(&b.rows) {
                prop_assert_eq!(&x.label, &y.label);
                prop_assert_eq!(x.alpha.is_some(), y.alpha.is_some());
                for (p, q) in [(x.alpha, y.alpha), (x.ci_low, y.ci_low), (x.ci_high, y.ci_high)] {
                    if let (Some(p), Some(q)) = (p, q) {
                        prop_assert!((p - q).abs() < 1e-12, "{}: {} vs {}", x.label, p, q);
                    }
                }
            }
        }
    }
}

mod importance {
    use super::*;

    #[test]
    fn self_prediction_is_perfect() {
        let x: Vec<f64> = (0..30).map(|i| (i % 7) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let fit = univariate_fit(&x, &y, ModelKind::Linear).unwrap();
        assert!((fit.fitness_value() - 1.0).abs() < 1e-12);
        assert!((fit.slope(0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn independent_predictor_explains_little() {
        let mut rng = ChaCha8Rng::seed_from_u64(400);
        let x: Vec<f64> = (0..400).map(|_| rng.random_range(1..=5) as f64).collect();
        let y: Vec<f64> = (0..400).map(|_| rng.random_range(1..=5) as f64).collect();
        let r2 = univariate_fit(&x, &y, ModelKind::Linear).unwrap().fitness_value();
        assert!(r2 < 0.05, "{r2}");
    }

    /// `n` pairs of A (first) against B, interactor choice `choice(i)` and
    /// annotator `Eng_c` choice `predictor(i)`.
    fn pairs_snapshot(n: usize, choice: impl Fn(usize) -> Choice, predictor: impl Fn(usize) -> Choice) -> CampaignSnapshot {
        let judgments = (0..n).map(|i| pair_judgment(&format!("p{i}"), "Qua_c", choice(i))).collect();
        let records = (0..n).map(|i| pair_record("x", &format!("p{i}"), &[("Eng_c", predictor(i))], i as i64)).collect();
        snapshot(corpus_with(paired("A", "B", n), judgments), records, Vec::new())
    }

    #[test]
    fn ties_are_excluded_from_the_pair_design() {
        let choice = |i: usize| if i < 8 { Choice::Neither } else if i % 2 == 0 { Choice::First } else { Choice::Second };
        let snap = pairs_snapshot(192, choice, |i| if i % 3 == 0 { Choice::First } else { Choice::Second });
        let (design, ties) = comparative_design(&snap, &["Eng_c".to_string()], "Qua_c").unwrap();
        assert_eq!((design.y.len(), ties), (184, 8));
        let report = importance_analysis(&snap).unwrap();
        assert_eq!(report.ties_excluded, 8);
        assert_eq!(report.row("Eng_c", "Qua_c").unwrap().n, 184);
        assert!(report.row("Eng_c", "Qua_d").is_none(), "comparative labels only predict pair preference");
    }

    fn swap_pairs(snap: &CampaignSnapshot) -> CampaignSnapshot {
        let mut file = snap.corpus.file().clone();
        for pair in snap.corpus.pairs() {
            let a = file.conversations.iter().position(|c| c.id == pair.first).unwrap();
            let b = file.conversations.iter().position(|c| c.id == pair.second).unwrap();
            file.conversations.swap(a, b);
        }
        for j in &mut file.judgments {
            for c in j.comparative.values_mut() {
                *c = c.swapped();
            }
        }
        let mut out = snap.clone();
        out.corpus = std::sync::Arc::new(abceval::corpus::Corpus::new(file, snap.corpus.schema().clone()).unwrap());
        for r in &mut out.records {
            if let abceval::metrics::Payload::PairChoices { choices } = &mut r.payload {
                for c in choices.values_mut() {
                    *c = c.swapped();
                }
            }
        }
        out
    }

    fn choice_of(v: u8) -> Choice {
        [Choice::First, Choice::Second, Choice::Neither][v as usize % 3]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn swapping_pair_order_keeps_the_fit(choices in prop::collection::vec((0u8..3, 0u8..3), 30..80)) {
            let snap = pairs_snapshot(choices.len(), |i| choice_of(choices[i].0), |i| choice_of(choices[i].1));
            let swapped = swap_pairs(&snap);
            let p = ["Eng_c".to_string()];
            let (d1, t1) = comparative_design(&snap, &p, "Qua_c").unwrap();
            let (d2, t2) = comparative_design(&swapped, &p, "Qua_c").unwrap();
            prop_assert_eq!(t1, t2);
            prop_assert_eq!(d1.y.len(), d2.y.len());
            for i in 0..d1.y.len() {
                prop_assert_eq!(d1.y[i], 1.0 - d2.y[i]);
                prop_assert_eq!(d1.x.get(i, 0), -d2.x.get(i, 0));
            }
            let (x1, x2) = (d1.x.column(0), d2.x.column(0));
            match (univariate_fit(&x1, &d1.y, ModelKind::Logistic), univariate_fit(&x2, &d2.y, ModelKind::Logistic)) {
                (Ok(a), Ok(b)) => {
                    prop_assert!((a.fitness_value() - b.fitness_value()).abs() < 1e-8);
                    prop_assert!((a.slope(0) - b.slope(0)).abs() < 1e-6);
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "one side failed: {:?} / {:?}", a.err(), b.err()),
            }
        }
    }
}

mod sensitivity {
    use super::*;

    /// Two or three bots of 32 dialogues; `flag(bot, conversation, turn)`.
    fn bots_snapshot(bots: &[&str], flag: impl Fn(usize, usize, usize) -> bool) -> CampaignSnapshot {
        let mut all = Vec::new();
        let mut records = Vec::new();
        for (bi, bot) in bots.iter().enumerate() {
            let cs = convs(bot, 32, 6);
            records.extend(flagged_records("x", &cs, |c, t| flag(bi, c, t)));
            all.extend(cs);
        }
        snapshot(corpus(all), records, Vec::new())
    }

    #[test]
    fn identical_bots_are_never_distinguished() {
        let snap = bots_snapshot(&["A", "B"], |_, c, t| (c + t) % 4 == 0);
        let report = sensitivity_analysis(&snap, 32, 1, &[0.01, 0.05, 0.1]).unwrap();
        for row in &report.rows {
            assert!(row.counts.iter().all(|&n| n == 0), "{}: {:?}", row.label, row.counts);
        }
        let t = &report.row(UNINT).unwrap().tests[0];
        assert_eq!((t.test, t.p_value, t.n), ("two_proportion_z", 1.0, [32, 32]));
    }

    #[test]
    fn maximal_separation_is_significant() {
        let snap = bots_snapshot(&["A", "B"], |b, _, _| b == 1);
        let report = sensitivity_analysis(&snap, 32, 1, &[0.1, 0.01, 0.05]).unwrap();
        assert_eq!(report.alphas, vec![0.01, 0.05, 0.1], "sorted");
        let row = report.row(UNINT).unwrap();
        assert_eq!(row.counts, vec![1, 1, 1]);
        assert_eq!(row.significant(0.01), vec![("A", "B")]);
        assert!(row.tests[0].p_value < 1e-10);
    }

    #[test]
    fn short_bots_are_reported() {
        let snap = bots_snapshot(&["A", "B"], |_, _, _| false);
        let report = sensitivity_analysis(&snap, 40, 1, &[0.05]).unwrap();
        assert_eq!(report.short_bots, vec!["A".to_string(), "B".to_string()]);
        assert_eq!(report.sample["A"].len(), 32);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn significance_nests_across_alphas(
            rates in prop::collection::vec(0.0f64..0.6, 3),
            seed in any::<u64>(),
            alphas in prop::collection::btree_set(1u32..300, 1..5),
        ) {
            let draws: Vec<Vec<bool>> = {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..3).map(|b| (0..32 * 6).map(|_| rng.random::<f64>() < rates[b]).collect()).collect()
            };
            let snap = bots_snapshot(&["A", "B", "C"], |b, c, t| draws[b][c * 6 + t]);
            let alphas: Vec<f64> = alphas.into_iter().map(|a| a as f64 / 1000.0).collect();
            let report = sensitivity_analysis(&snap, 24, seed, &alphas).unwrap();
            for row in &report.rows {
                prop_assert!(row.counts.windows(2).all(|w| w[0] <= w[1]), "{}: {:?}", row.label, row.counts);
                for w in report.alphas.windows(2) {
                    let (lo, hi) = (row.significant(w[0]), row.significant(w[1]));
                    prop_assert!(lo.iter().all(|p| hi.contains(p)));
                }
                for t in &row.tests {
                    prop_assert!(t.p_value > 0.0 && t.p_value <= 1.0);
                }
            }
        }
    }
}

mod stepwise {
    use super::*;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn single_predictor_gives_one_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (x, y) = random_instance(&mut rng, 1, ModelKind::Linear);
        let trace = stepwise_search(&x, &y, &names(1), ModelKind::Linear, 100).unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.steps[0].removed, None);
    }

    #[test]
    fn duplicated_column_costs_nothing_to_remove() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (x, y) = random_instance(&mut rng, 2, ModelKind::Linear);
        let cols = [x.column(0), x.column(0), x.column(1)];
        let x = Matrix::from_columns(&[&cols[0], &cols[1], &cols[2]]);
        let trace = stepwise_search(&x, &y, &names(3), ModelKind::Linear, 100).unwrap();
        assert_eq!(trace.steps.len(), 3);
        let drop = trace.steps[0].fitness - trace.steps[1].fitness;
        assert!(drop.abs() < 1e-9, "{drop}");
        assert!(matches!(trace.steps[1].removed.as_deref(), Some("x0" | "x1")));
        assert!(!trace.steps[0].all_positive, "a redundant copy does not contribute");
    }

    #[test]
    fn bad_arguments_are_rejected() {
        let x = Matrix::zeros(5, 2);
        let y = vec![0.0; 5];
        assert!(stepwise_search(&x, &y, &names(1), ModelKind::Linear, 10).is_err());
        assert!(stepwise_search(&x, &y, &names(2), ModelKind::Linear, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn full_beam_matches_exhaustive_and_fitness_never_rises(seed in any::<u64>(), p in 1usize..=6, logistic in any::<bool>()) {
            let model = if logistic { ModelKind::Logistic } else { ModelKind::Linear };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (x, y) = random_instance(&mut rng, p, model);
            let Some(oracle) = exhaustive_trace(&x, &y, model) else { return Ok(()) };
            let trace = stepwise_search(&x, &y, &names(p), model, 1 << p).unwrap();
            prop_assert_eq!(compare_trace(&trace, &oracle, &names(p)), Ok(()));
            for w in trace.steps.windows(2) {
                prop_assert!(w[1].fitness <= w[0].fitness + 1e-9, "{} then {}", w[0].fitness, w[1].fitness);
                prop_assert_eq!(w[1].size + 1, w[0].size);
            }
        }

        #[test]
        fn narrow_beams_still_shrink_monotonically(seed in any::<u64>(), beam in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (x, y) = random_instance(&mut rng, 6, ModelKind::Linear);
            let trace = stepwise_search(&x, &y, &names(6), ModelKind::Linear, beam).unwrap();
            prop_assert_eq!(trace.steps.len(), 6);
            for w in trace.steps.windows(2) {
                prop_assert!(w[1].fitness <= w[0].fitness + 1e-9);
            }
        }
    }
}

mod cost {
    use super::*;

    fn timed(task: &str, minutes: &[f64]) -> Vec<AnnotationRecord> {
        minutes
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let mut r = record("x", task, &format!("A-{i}"), dialogue_ratings(&[]), i as i64);
                r.duration = m * 60.0;
                r
            })
            .collect()
    }

    #[test]
    fn throughput_is_sixty_over_the_median() {
        let records = timed("dialogue_likert", &[1.0, 2.0, 6.0]);
        let snap = snapshot(corpus(convs("A", 3, 2)), records, Vec::new());
        let report = cost_analysis(&snap, 400, 20.0);
        let row = report.task("dialogue_likert").unwrap();
        assert_eq!(row.median_minutes, 2.0);
        assert_eq!(row.throughput_per_hour, 30.0);
        assert!((row.estimated_cost - 2.0 * 400.0 / 60.0 * 20.0).abs() < 1e-9);
        assert_eq!(row.records, 3);
        assert!((row.actual_paid.unwrap() - 3.0 * 0.60).abs() < 1e-12);
        let method = report.method("dialogue_likert").unwrap();
        assert_eq!(method.median_minutes, 2.0);
    }

    #[test]
    fn tasks_without_records_are_omitted() {
        let snap = snapshot(corpus(convs("A", 3, 2)), Vec::new(), Vec::new());
        let report = cost_analysis(&snap, 400, 20.0);
        assert!(report.tasks.is_empty() && report.methods.is_empty());
        let snap = snapshot(corpus(convs("A", 3, 2)), timed("dialogue_likert", &[3.0]), Vec::new());
        let report = cost_analysis(&snap, 400, 20.0);
        assert_eq!(report.tasks.len(), 1);
        assert!(report.method("turn_likert").is_none(), "a method needs all of its tasks");
    }
}

mod power_and_pass_rates {
    use super::*;

    #[test]
    fn zero_effect_has_power_alpha() {
        let rows = power_report(&[0.0], &[0.0], &[50, 400], 0.05).unwrap();
        assert_eq!(rows.len(), 4);
        for r in rows {
            assert!((r.power - 0.05).abs() < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn power_grows_with_n() {
        let rows = power_report(&[0.3], &[], &[20, 50, 100, 200], 0.05).unwrap();
        assert!(rows.windows(2).all(|w| w[0].power < w[1].power));
    }

    fn with_training(states: &[(&str, &str, Verdict)]) -> CampaignSnapshot {
        let mut snap = snapshot(corpus(convs("A", 1, 2)), Vec::new(), Vec::new());
        snap.training = states
            .iter()
            .map(|(who, task, verdict)| {
                let mut st = TrainingState::new(task);
                st.verdict = *verdict;
                (who.to_string(), st)
            })
            .collect();
        snap
    }

    #[test]
    fn pass_rate_is_passed_over_finished() {
        use Verdict::*;
        let snap = with_training(&[
            ("a", "empathy", Passed),
            ("b", "empathy", Passed),
            ("c", "empathy", Passed),
            ("d", "empathy", Failed),
            ("e", "empathy", InProgress),
            ("a", "flow", Passed),
            ("b", "knowledge", InProgress),
        ]);
        let rates = training_pass_rates(&snap);
        let get = |k: &str| rates.iter().find(|r| r.task_key == k);
        assert_eq!(get("empathy").unwrap().rate, 0.75);
        assert_eq!(get("flow").unwrap().rate, 1.0);
        assert!(get("knowledge").is_none(), "no finished screening");
        assert!(get("antisocial").is_none());
    }
}
