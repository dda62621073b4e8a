//! Inter-annotator agreement on the double-annotated subset.
//!
//! Units are the label's natural grain: a bot turn for behavior and turn
//! Likert labels, a dialogue for dialogue Likert, a session pair for
//! comparative labels. Bootstrap cases are conversations (pairs for
//! comparative) so turns of one dialogue are resampled together.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use statkit::{bootstrap_bca_detail, CoincidenceMatrix, Level, ReliabilityData, StatError};

use super::{cell, csv_string, label_seed, Result};
use crate::campaign::{record_target_in, AnnotationRecord, CampaignSnapshot};
use crate::corpus::{Choice, LabelDef, LabelKind};
use crate::metrics::{record_turn_flags, Payload};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementRow {
    pub label: String,
    pub level: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_high: Option<f64>,
    /// Units coded by at least two annotators.
    pub units: usize,
    /// Double-annotated cases (conversations or pairs).
    pub cases: usize,
    /// Why `alpha` is absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub seed: u64,
    pub resamples: usize,
    pub level: f64,
    pub double_annotated: usize,
    pub rows: Vec<AgreementRow>,
}

impl AgreementReport {
    pub fn row(&self, label: &str) -> Option<&AgreementRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_csv(&self) -> String {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.label.clone(),
                    r.level.into(),
                    cell(r.alpha),
                    cell(r.ci_low),
                    cell(r.ci_high),
                    r.units.to_string(),
                    r.cases.to_string(),
                    r.reason.clone().unwrap_or_default(),
                    self.seed.to_string(),
                    self.resamples.to_string(),
                ]
            })
            .collect();
        csv_string(&["label", "level", "alpha", "ci_low", "ci_high", "units", "cases", "reason", "seed", "resamples"], rows)
    }
}

fn level_for(kind: LabelKind) -> Level {
    match kind {
        LabelKind::BehaviorBinary | LabelKind::Comparative => Level::Nominal,
        LabelKind::LikertTurn | LabelKind::LikertDialogue => Level::Interval,
    }
}

fn choice_code(c: Choice) -> f64 {
    match c {
        Choice::First => 0.0,
        Choice::Neither => 1.0,
        Choice::Second => 2.0,
    }
}

/// Unit ids are `case` or `case#turn`; the case is the part before `#`.
fn case_of(unit: &str) -> &str {
    unit.split_once('#').map_or(unit, |(c, _)| c)
}

fn reliability_data(snapshot: &CampaignSnapshot, label: &LabelDef, records: &[&AnnotationRecord]) -> Result<ReliabilityData> {
    let schema = snapshot.corpus.schema();
    let task = schema.task_for_label(&label.key).expect("schema label has a task");
    let mut data = ReliabilityData::new(level_for(label.kind));
    for r in records {
        let case = r.target();
        match (&r.payload, label.kind) {
            (Payload::Turns { .. }, LabelKind::BehaviorBinary) => {
                for (turn, flagged) in record_turn_flags(task, r, &label.key)? {
                    data.insert(format!("{case}#{turn}"), r.annotator_id.clone(), if flagged { 1.0 } else { 0.0 });
                }
            }
            (Payload::TurnRatings { ratings }, LabelKind::LikertTurn) => {
                for t in ratings {
                    data.insert(format!("{case}#{}", t.turn), r.annotator_id.clone(), t.value as f64);
                }
            }
            (Payload::DialogueRatings { ratings }, LabelKind::LikertDialogue) => {
                if let Some(&v) = ratings.get(&label.key) {
                    data.insert(case, r.annotator_id.clone(), v as f64);
                }
            }
            (Payload::PairChoices { choices }, LabelKind::Comparative) => {
                if let Some(&c) = choices.get(&label.key) {
                    data.insert(case, r.annotator_id.clone(), choice_code(c));
                }
            }
            _ => {}
        }
    }
    Ok(data)
}

fn alpha_of(parts: &[&CoincidenceMatrix], level: Level, domain: &[f64]) -> Option<f64> {
    let mut m = CoincidenceMatrix::new(level, domain.to_vec());
    for p in parts {
        m.accumulate(p);
    }
    m.alpha().ok()
}

/// Krippendorff's alpha per label with BCa intervals from `resamples`
/// case resamples. Labels without overlap or variation are reported with
/// a reason instead of a value.
pub fn agreement_analysis(snapshot: &CampaignSnapshot, resamples: usize, level: f64, seed: u64) -> Result<AgreementReport> {
    let corpus = &snapshot.corpus;
    let schema = corpus.schema();
    let double: BTreeSet<&str> = snapshot.config.double_annotation.iter().map(String::as_str).collect();
    let mut by_task: BTreeMap<&str, Vec<&AnnotationRecord>> = BTreeMap::new();
    for r in &snapshot.records {
        if record_target_in(corpus, r, &double) {
            by_task.entry(r.task_key.as_str()).or_default().push(r);
        }
    }
    let rows: Vec<Result<AgreementRow>> = schema
        .labels
        .par_iter()
        .map(|label| {
            let task = schema.task_for_label(&label.key).expect("schema label has a task");
            let records = by_task.get(task.key.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            let data = reliability_data(snapshot, label, records)?;
            let lvl = level_for(label.kind);
            let grouped = data.grouped_coincidences(|u| case_of(u).to_string());
            let mut row = AgreementRow {
                label: label.key.clone(),
                level: match lvl {
                    Level::Nominal => "nominal",
                    Level::Interval => "interval",
                },
                alpha: None,
                ci_low: None,
                ci_high: None,
                units: data.pairable_units(),
                cases: grouped.values().filter(|m| m.total() > 0.0).count(),
                reason: None,
            };
            if row.units == 0 {
                row.reason = Some("no overlap".into());
                return Ok(row);
            }
            let domain = data.domain();
            let cases: Vec<&CoincidenceMatrix> = grouped.values().filter(|m| m.total() > 0.0).collect();
            let stat = |sample: &[&&CoincidenceMatrix]| {
                let parts: Vec<&CoincidenceMatrix> = sample.iter().map(|m| **m).collect();
                alpha_of(&parts, lvl, &domain)
            };
            match bootstrap_bca_detail(&cases, stat, resamples, level, label_seed(seed, &label.key)) {
                Ok(d) => {
                    row.alpha = Some(d.interval.point);
                    row.ci_low = Some(d.interval.low);
                    row.ci_high = Some(d.interval.high);
                }
                Err(StatError::StatisticUndefined) => row.reason = Some("undefined: no variation in coded values".into()),
                Err(StatError::UnstableStatistic { failure_rate }) => {
                    row.alpha = alpha_of(&cases, lvl, &domain);
                    row.reason = Some(format!("interval omitted: alpha undefined on {:.1}% of resamples", failure_rate * 100.0));
                }
                Err(e) => return Err(e.into()),
            }
            Ok(row)
        })
        .collect();
    Ok(AgreementReport {
        seed,
        resamples,
        level,
        double_annotated: double.len(),
        rows: rows.into_iter().collect::<Result<Vec<_>>>()?,
    })
}
