//! Distinctness: backwards stepwise regression by beam search.
//!
//! Starting from every predictor, each step deletes one predictor from each
//! state in the beam, scores the distinct children by adjusted fitness and
//! keeps the best `beam_width`. Ties rank by the smaller predictor bitmask,
//! so results are deterministic. States whose fit fails are discarded and
//! noted.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use statkit::Matrix;

use super::importance::{comparative_design, linear_design, quality_label};
use super::{csv_string, AnalysisError, ModelKind, Result};
use crate::campaign::CampaignSnapshot;
use crate::corpus::{LabelKind, Method};

/// Search limit from the bitmask representation.
pub const MAX_PREDICTORS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepwiseStep {
    pub size: usize,
    /// Predictor bitmask of the best state (bit i = predictor i).
    pub mask: u64,
    pub predictors: Vec<String>,
    pub fitness: f64,
    pub adjusted_fitness: f64,
    /// Every single deletion from this state lowers adjusted fitness.
    pub all_positive: bool,
    /// Predictor deleted from the parent state that produced this one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub removed: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepwiseTrace {
    pub model: ModelKind,
    pub beam_width: usize,
    pub n: usize,
    /// One step per state size, from all predictors down to one.
    pub steps: Vec<StepwiseStep>,
    pub notes: Vec<String>,
}

impl StepwiseTrace {
    pub fn step(&self, size: usize) -> Option<&StepwiseStep> {
        self.steps.iter().find(|s| s.size == size)
    }
}

#[derive(Clone, Copy)]
struct Scored {
    mask: u64,
    fitness: f64,
    adjusted: f64,
    parent_removed: Option<usize>,
}

fn columns(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask & (1 << i) != 0).collect()
}

fn score(x: &Matrix, y: &[f64], model: ModelKind, mask: u64) -> std::result::Result<(f64, f64), String> {
    // aliased columns are dropped from the fit but still count against adjusted fitness
    let fit = model.fit(&x.select_columns(&columns(mask)), y).map_err(|e| e.to_string())?;
    Ok((fit.fitness_value(), fit.adjusted_fitness()))
}

/// Beam search over predictor subsets of `x` (one column per name).
pub fn stepwise_search(x: &Matrix, y: &[f64], names: &[String], model: ModelKind, beam_width: usize) -> Result<StepwiseTrace> {
    let p = x.cols();
    if p == 0 || p != names.len() {
        return Err(AnalysisError::Invalid(format!("need one name per predictor column, got {} names for {p} columns", names.len())));
    }
    if p > MAX_PREDICTORS {
        return Err(AnalysisError::Invalid(format!("at most {MAX_PREDICTORS} predictors, got {p}")));
    }
    if beam_width == 0 {
        return Err(AnalysisError::Invalid("beam width must be positive".into()));
    }
    let full = if p == 64 { u64::MAX } else { (1u64 << p) - 1 };
    let mut notes = Vec::new();
    let mut cache: BTreeMap<u64, Option<(f64, f64)>> = BTreeMap::new();
    let eval = |masks: Vec<u64>, notes: &mut Vec<String>, cache: &mut BTreeMap<u64, Option<(f64, f64)>>| {
        let todo: Vec<u64> = masks.into_iter().filter(|m| !cache.contains_key(m)).collect();
        let scored: Vec<(u64, std::result::Result<(f64, f64), String>)> = todo.par_iter().map(|&m| (m, score(x, y, model, m))).collect();
        for (m, r) in scored {
            match r {
                Ok(v) => {
                    cache.insert(m, Some(v));
                }
                Err(e) => {
                    let names: Vec<&str> = columns(m).iter().map(|&i| names[i].as_str()).collect();
                    notes.push(format!("discarded {{{}}}: {e}", names.join(", ")));
                    cache.insert(m, None);
                }
            }
        }
    };
    eval(vec![full], &mut notes, &mut cache);
    let Some((f, a)) = cache[&full] else {
        return Err(AnalysisError::Invalid(format!("full model fails: {}", notes.last().cloned().unwrap_or_default())));
    };
    let mut beam = vec![Scored { mask: full, fitness: f, adjusted: a, parent_removed: None }];
    let mut best_per_size = vec![beam[0]];
    for size in (1..p).rev() {
        let mut children: BTreeMap<u64, Option<usize>> = BTreeMap::new();
        // parents arrive best first, so the first parent to reach a child is the best one
        for s in &beam {
            for i in columns(s.mask) {
                children.entry(s.mask & !(1 << i)).or_insert(Some(i));
            }
        }
        eval(children.keys().copied().collect(), &mut notes, &mut cache);
        let mut next: Vec<Scored> = children
            .iter()
            .filter_map(|(&m, &r)| cache[&m].map(|(fitness, adjusted)| Scored { mask: m, fitness, adjusted, parent_removed: r }))
            .collect();
        if next.is_empty() {
            notes.push(format!("search stopped: no fittable state with {} predictors", size));
            break;
        }
        next.sort_by(|a, b| b.adjusted.total_cmp(&a.adjusted).then(a.mask.cmp(&b.mask)));
        next.truncate(beam_width);
        best_per_size.push(next[0]);
        beam = next;
    }

    // positive-contribution flags need every deletion of each best state
    let mut deletions = Vec::new();
    for s in &best_per_size {
        for i in columns(s.mask) {
            deletions.push(s.mask & !(1 << i));
        }
    }
    eval(deletions, &mut notes, &mut cache);
    let steps = best_per_size
        .iter()
        .map(|s| {
            let all_positive = columns(s.mask).iter().all(|&i| {
                let child = s.mask & !(1 << i);
                cache[&child].is_none_or(|(_, adj)| adj < s.adjusted)
            });
            StepwiseStep {
                size: columns(s.mask).len(),
                mask: s.mask,
                predictors: columns(s.mask).iter().map(|&i| names[i].clone()).collect(),
                fitness: s.fitness,
                adjusted_fitness: s.adjusted,
                all_positive,
                removed: s.parent_removed.map(|i| names[i].clone()),
            }
        })
        .collect();
    Ok(StepwiseTrace { model, beam_width, n: y.len(), steps, notes })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodTrace {
    pub method: Method,
    #[serde(flatten)]
    pub trace: StepwiseTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepwiseReport {
    pub target: String,
    pub traces: Vec<MethodTrace>,
    /// Methods skipped, with the reason.
    pub skipped: Vec<(Method, String)>,
}

impl StepwiseReport {
    pub fn trace(&self, method: Method) -> Option<&StepwiseTrace> {
        self.traces.iter().find(|t| t.method == method).map(|t| &t.trace)
    }

    pub fn to_csv(&self) -> String {
        let mut rows = Vec::new();
        for t in &self.traces {
            for s in &t.trace.steps {
                rows.push(vec![
                    t.method.as_str().into(),
                    s.size.to_string(),
                    s.predictors.join(";"),
                    s.fitness.to_string(),
                    s.adjusted_fitness.to_string(),
                    s.all_positive.to_string(),
                    s.removed.clone().unwrap_or_default(),
                    t.trace.n.to_string(),
                    t.trace.beam_width.to_string(),
                ]);
            }
        }
        csv_string(&["method", "size", "predictors", "fitness", "adjusted_fitness", "all_positive", "removed", "n", "beam_width"], rows)
    }
}

/// Stepwise traces for every method against `target`, which must be the
/// dialogue-level or pair-level quality label. Quality labels never enter
/// as predictors, and comparative labels only against the pair target.
pub fn stepwise_analysis(snapshot: &CampaignSnapshot, target: &str, beam_width: usize) -> Result<StepwiseReport> {
    let schema = snapshot.corpus.schema();
    let qd = quality_label(snapshot, LabelKind::LikertDialogue)?;
    let qc = quality_label(snapshot, LabelKind::Comparative)?;
    let model = if target == qd {
        ModelKind::Linear
    } else if target == qc {
        ModelKind::Logistic
    } else {
        return Err(AnalysisError::Invalid(format!("stepwise target must be {qd} or {qc}, got {target:?}")));
    };
    let mut traces = Vec::new();
    let mut skipped = Vec::new();
    for method in Method::ALL {
        if model == ModelKind::Linear && method == Method::Comparative {
            skipped.push((method, "comparative labels cannot predict a dialogue rating".into()));
            continue;
        }
        let predictors: Vec<String> = schema
            .labels
            .iter()
            .filter(|l| !l.is_quality() && schema.task_for_label(&l.key).is_some_and(|t| t.method == method))
            .map(|l| l.key.clone())
            .collect();
        if predictors.len() < 2 {
            skipped.push((method, format!("{} predictors", predictors.len())));
            continue;
        }
        let design = match model {
            ModelKind::Linear => linear_design(snapshot, &predictors, target)?,
            ModelKind::Logistic => comparative_design(snapshot, &predictors, target)?.0,
        };
        match stepwise_search(&design.x, &design.y, &design.predictors, model, beam_width) {
            Ok(trace) => traces.push(MethodTrace { method, trace }),
            Err(e) => skipped.push((method, e.to_string())),
        }
    }
    Ok(StepwiseReport { target: target.into(), traces, skipped })
}
