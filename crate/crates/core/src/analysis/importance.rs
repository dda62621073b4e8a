//! Predictive validity: univariate regressions of each metric on the
//! interactor's quality judgment.
//!
//! Linear models predict the dialogue rating from a dialogue-level value.
//! Logistic models predict which conversation of a session pair the
//! interactor preferred (0 = first, 1 = second); non-comparative
//! predictors enter as `value(second) - value(first)` and comparative
//! predictors as first = -1, neither = 0, second = +1. Pairs the interactor
//! judged a tie are excluded before fitting.

use rayon::prelude::*;
use serde::Serialize;
use statkit::{Matrix, RegressionFit};

use super::{cell, csv_string, AnalysisError, ModelKind, Result};
use crate::campaign::CampaignSnapshot;
use crate::corpus::{Choice, LabelKind};
use crate::metrics::{dialogue_value, pair_choice, Annotations, MetricError};

/// Rows of a regression design with their subjects (conversation or pair ids).
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub predictors: Vec<String>,
    pub subjects: Vec<String>,
    pub x: Matrix,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceRow {
    pub predictor: String,
    pub target: String,
    pub model: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<f64>,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceReport {
    pub dialogue_target: String,
    pub pair_target: String,
    /// Judged pairs dropped because the interactor chose neither.
    pub ties_excluded: usize,
    pub rows: Vec<ImportanceRow>,
}

impl ImportanceReport {
    pub fn row(&self, predictor: &str, target: &str) -> Option<&ImportanceRow> {
        self.rows.iter().find(|r| r.predictor == predictor && r.target == target)
    }

    pub fn to_csv(&self) -> String {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.predictor.clone(),
                    r.target.clone(),
                    r.model.as_str().into(),
                    cell(r.fitness),
                    cell(r.coefficient),
                    r.n.to_string(),
                    r.note.clone().unwrap_or_default(),
                ]
            })
            .collect();
        csv_string(&["predictor", "target", "model", "fitness", "coefficient", "n", "note"], rows)
    }
}

/// Fit of `y` on a single predictor column.
pub fn univariate_fit(x: &[f64], y: &[f64], model: ModelKind) -> statkit::Result<RegressionFit> {
    model.fit(&Matrix::from_columns(&[x]), y)
}

pub(crate) fn quality_label(snapshot: &CampaignSnapshot, kind: LabelKind) -> Result<String> {
    snapshot
        .corpus
        .schema()
        .labels
        .iter()
        .find(|l| l.kind == kind && l.is_quality())
        .map(|l| l.key.clone())
        .ok_or_else(|| AnalysisError::Invalid(format!("schema has no quality label of kind {kind:?}")))
}

/// Conversations with an interactor rating for `target` and a value for
/// every predictor, in corpus order.
pub fn linear_design(snapshot: &CampaignSnapshot, predictors: &[String], target: &str) -> Result<Design> {
    let ann = Annotations::new(&snapshot.corpus, &snapshot.records);
    let mut subjects = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    for conv in snapshot.corpus.conversations() {
        let Some(&rating) = snapshot.corpus.judgment_for_conversation(&conv.id).and_then(|j| j.dialogue_likert.get(target)) else {
            continue;
        };
        let mut row = Vec::with_capacity(predictors.len());
        for p in predictors {
            match dialogue_value(&ann, &conv.id, p)? {
                Some(v) => row.push(v),
                None => break,
            }
        }
        if row.len() == predictors.len() {
            subjects.push(conv.id.clone());
            rows.push(row);
            y.push(rating as f64);
        }
    }
    Ok(Design { predictors: predictors.to_vec(), subjects, x: design_matrix(&rows, predictors.len()), y })
}

fn design_matrix(rows: &[Vec<f64>], cols: usize) -> Matrix {
    if rows.is_empty() {
        Matrix::zeros(0, cols)
    } else {
        Matrix::from_rows(rows)
    }
}

fn encode_choice(c: Choice) -> f64 {
    match c {
        Choice::First => -1.0,
        Choice::Neither => 0.0,
        Choice::Second => 1.0,
    }
}

/// Judged, non-tie session pairs with every predictor defined, in corpus
/// pair order. Returns the design and the number of ties excluded.
pub fn comparative_design(snapshot: &CampaignSnapshot, predictors: &[String], target: &str) -> Result<(Design, usize)> {
    let corpus = &snapshot.corpus;
    let ann = Annotations::new(corpus, &snapshot.records);
    let schema = corpus.schema();
    let mut ties = 0;
    let mut subjects = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    for pair in corpus.pairs() {
        let Some(&choice) = corpus.judgment_for_pair(&pair.id).and_then(|j| j.comparative.get(target)) else { continue };
        let label = match choice {
            Choice::First => 0.0,
            Choice::Second => 1.0,
            Choice::Neither => {
                ties += 1;
                continue;
            }
        };
        let mut row = Vec::with_capacity(predictors.len());
        for p in predictors {
            let kind = schema.label(p).ok_or_else(|| MetricError::UnknownLabel(p.clone()))?.kind;
            let v = if kind == LabelKind::Comparative {
                pair_choice(&ann, &pair.id, p)?.map(encode_choice)
            } else {
                match (dialogue_value(&ann, &pair.first, p)?, dialogue_value(&ann, &pair.second, p)?) {
                    (Some(a), Some(b)) => Some(b - a),
                    _ => None,
                }
            };
            match v {
                Some(v) => row.push(v),
                None => break,
            }
        }
        if row.len() == predictors.len() {
            subjects.push(pair.id.clone());
            rows.push(row);
            y.push(label);
        }
    }
    let x = design_matrix(&rows, predictors.len());
    Ok((Design { predictors: predictors.to_vec(), subjects, x, y }, ties))
}

fn fit_row(predictor: &str, target: &str, model: ModelKind, design: &Design) -> ImportanceRow {
    let n = design.y.len();
    let mut row = ImportanceRow { predictor: predictor.into(), target: target.into(), model, fitness: None, coefficient: None, n, note: None };
    if n == 0 {
        row.note = Some("no usable observations".into());
        return row;
    }
    match model.fit(&design.x, &design.y) {
        Ok(fit) => {
            if fit.aliased.is_empty() {
                row.fitness = Some(fit.fitness_value());
                row.coefficient = Some(fit.slope(0));
            } else {
                row.fitness = Some(fit.fitness_value());
                row.note = Some("predictor is constant".into());
            }
        }
        Err(e) => row.note = Some(e.to_string()),
    }
    row
}

/// Univariate importance of every non-quality label against the
/// interactor's dialogue rating (non-comparative labels) and pair
/// preference (all labels).
pub fn importance_analysis(snapshot: &CampaignSnapshot) -> Result<ImportanceReport> {
    let schema = snapshot.corpus.schema();
    let qd = quality_label(snapshot, LabelKind::LikertDialogue)?;
    let qc = quality_label(snapshot, LabelKind::Comparative)?;
    let labels: Vec<&crate::corpus::LabelDef> = schema.labels.iter().filter(|l| !l.is_quality()).collect();
    let mut ties_excluded = 0;
    let rows: Vec<Result<Vec<ImportanceRow>>> = labels
        .par_iter()
        .map(|l| {
            let mut out = Vec::new();
            let p = vec![l.key.clone()];
            if l.kind != LabelKind::Comparative {
                out.push(fit_row(&l.key, &qd, ModelKind::Linear, &linear_design(snapshot, &p, &qd)?));
            }
            let (design, _) = comparative_design(snapshot, &p, &qc)?;
            out.push(fit_row(&l.key, &qc, ModelKind::Logistic, &design));
            Ok(out)
        })
        .collect();
    if !labels.is_empty() {
        ties_excluded = comparative_design(snapshot, &[], &qc)?.1;
    }
    Ok(ImportanceReport {
        dialogue_target: qd,
        pair_target: qc,
        ties_excluded,
        rows: rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect(),
    })
}
