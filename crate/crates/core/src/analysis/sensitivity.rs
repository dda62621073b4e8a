//! Sensitivity: how many bot pairs each metric separates.
//!
//! Behavior labels use a pooled two-proportion z-test on turn counts,
//! Likert labels a Welch t-test on per-dialogue values (the dialogue mean
//! for turn Likert), comparative labels an exact sign test on the pairs'
//! choices. Dialogues are downsampled once per run to a fixed count per
//! bot; comparative tests use every judged pair of the two bots.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statkit::{sign_test, t_test, two_prop_z_test, StatError, TestResult};

use super::{csv_string, Result};
use crate::campaign::CampaignSnapshot;
use crate::corpus::{LabelDef, LabelKind};
use crate::metrics::{behavior_counts, comparative_rates, dialogue_value, Annotations};

pub const DEFAULT_ALPHAS: [f64; 3] = [0.01, 0.05, 0.1];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairTest {
    pub bot_a: String,
    pub bot_b: String,
    pub test: &'static str,
    pub statistic: f64,
    pub p_value: f64,
    /// Dialogues (pairs for comparative) behind each side.
    pub n: [usize; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub label: String,
    /// Significant bot pairs at each of the report's alpha levels.
    pub counts: Vec<usize>,
    pub tests: Vec<PairTest>,
}

impl SensitivityRow {
    /// `(bot_a, bot_b)` pairs significant at `alpha`.
    pub fn significant(&self, alpha: f64) -> Vec<(&str, &str)> {
        self.tests.iter().filter(|t| t.p_value < alpha).map(|t| (t.bot_a.as_str(), t.bot_b.as_str())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub seed: u64,
    pub downsample: usize,
    pub alphas: Vec<f64>,
    /// Bots with fewer dialogues than `downsample`; all of theirs were used.
    pub short_bots: Vec<String>,
    /// Dialogues used per bot after downsampling.
    pub sample: BTreeMap<String, Vec<String>>,
    pub rows: Vec<SensitivityRow>,
}

impl SensitivityReport {
    pub fn row(&self, label: &str) -> Option<&SensitivityRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Alpha levels as rows, labels as columns, cells = significant pairs.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["alpha"];
        header.extend(self.rows.iter().map(|r| r.label.as_str()));
        let rows = self
            .alphas
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let mut row = vec![a.to_string()];
                row.extend(self.rows.iter().map(|r| r.counts[i].to_string()));
                row
            })
            .collect();
        csv_string(&header, rows)
    }

    /// One line per (label, bot pair) test.
    pub fn tests_csv(&self) -> String {
        let rows = self
            .rows
            .iter()
            .flat_map(|r| {
                r.tests.iter().map(move |t| {
                    vec![
                        r.label.clone(),
                        t.bot_a.clone(),
                        t.bot_b.clone(),
                        t.test.into(),
                        t.statistic.to_string(),
                        t.p_value.to_string(),
                        t.n[0].to_string(),
                        t.n[1].to_string(),
                        t.note.clone().unwrap_or_default(),
                    ]
                })
            })
            .collect();
        csv_string(&["label", "bot_a", "bot_b", "test", "statistic", "p_value", "n_a", "n_b", "note"], rows)
    }
}

fn downsample(snapshot: &CampaignSnapshot, per_bot: usize, seed: u64) -> (BTreeMap<String, Vec<String>>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = BTreeMap::new();
    let mut short = Vec::new();
    for bot in snapshot.corpus.bots() {
        let mut ids: Vec<String> = snapshot.corpus.conversations().iter().filter(|c| c.bot_id == bot).map(|c| c.id.clone()).collect();
        ids.sort();
        if ids.len() < per_bot {
            short.push(bot.clone());
        } else {
            ids.shuffle(&mut rng);
            ids.truncate(per_bot);
            ids.sort();
        }
        sample.insert(bot, ids);
    }
    (sample, short)
}

fn pair_test(ann: &Annotations, label: &LabelDef, a: &str, b: &str, sample: &BTreeMap<String, Vec<String>>) -> Result<PairTest> {
    let mut out = PairTest { bot_a: a.into(), bot_b: b.into(), test: "", statistic: 0.0, p_value: 1.0, n: [0, 0], note: None };
    let task = ann.corpus().schema().task_for_label(&label.key).expect("schema label has a task");
    let annotated = |bot: &str| -> Vec<&String> { sample[bot].iter().filter(|c| ann.primary(&task.key, c).is_some()).collect() };
    let result: std::result::Result<TestResult, StatError> = match label.kind {
        LabelKind::BehaviorBinary => {
            out.test = "two_proportion_z";
            let mut totals = [(0u64, 0u64); 2];
            for (side, bot) in [a, b].into_iter().enumerate() {
                let convs = annotated(bot);
                out.n[side] = convs.len();
                for c in convs {
                    let (k, n) = behavior_counts(ann, c, &label.key)?;
                    totals[side].0 += k;
                    totals[side].1 += n;
                }
            }
            two_prop_z_test(totals[0].0, totals[0].1, totals[1].0, totals[1].1)
        }
        LabelKind::LikertDialogue | LabelKind::LikertTurn => {
            out.test = "welch_t";
            let mut values: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
            for (side, bot) in [a, b].into_iter().enumerate() {
                for c in annotated(bot) {
                    if let Some(v) = dialogue_value(ann, c, &label.key)? {
                        values[side].push(v);
                    }
                }
                out.n[side] = values[side].len();
            }
            t_test(&values[0], &values[1])
        }
        LabelKind::Comparative => {
            out.test = "sign";
            let m = comparative_rates(ann, a, Some(b), &label.key, 0.95)?;
            let wtl = m.counts.unwrap_or_default();
            out.n = [wtl.total() as usize, wtl.total() as usize];
            sign_test(wtl.win, wtl.loss, wtl.tie)
        }
    };
    match result {
        Ok(t) => {
            out.statistic = t.statistic;
            out.p_value = t.p_value;
        }
        // untestable pairs count as not significant
        Err(e) => out.note = Some(e.to_string()),
    }
    Ok(out)
}

/// Tests every bot pair on every label and tallies significant pairs at
/// each of `alphas` (sorted ascending in the report).
pub fn sensitivity_analysis(snapshot: &CampaignSnapshot, per_bot: usize, seed: u64, alphas: &[f64]) -> Result<SensitivityReport> {
    let ann = Annotations::new(&snapshot.corpus, &snapshot.records);
    let (sample, short_bots) = downsample(snapshot, per_bot, seed);
    let bots = snapshot.corpus.bots();
    let mut pairs = Vec::new();
    for i in 0..bots.len() {
        for j in i + 1..bots.len() {
            pairs.push((bots[i].as_str(), bots[j].as_str()));
        }
    }
    let mut alphas = alphas.to_vec();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let rows: Vec<Result<SensitivityRow>> = snapshot
        .corpus
        .schema()
        .labels
        .par_iter()
        .map(|label| {
            let tests = pairs.iter().map(|(a, b)| pair_test(&ann, label, a, b, &sample)).collect::<Result<Vec<_>>>()?;
            let counts = alphas.iter().map(|&al| tests.iter().filter(|t| t.p_value < al).count()).collect();
            Ok(SensitivityRow { label: label.key.clone(), counts, tests })
        })
        .collect();
    Ok(SensitivityReport {
        seed,
        downsample: per_bot,
        alphas,
        short_bots,
        sample,
        rows: rows.into_iter().collect::<Result<Vec<_>>>()?,
    })
}
