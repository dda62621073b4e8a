//! Cost and throughput from median completion times.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{cell, csv_string};
use crate::campaign::CampaignSnapshot;
use crate::corpus::{Method, Unit};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostRow {
    pub name: String,
    /// `task` or `method`.
    pub kind: &'static str,
    pub median_minutes: f64,
    pub throughput_per_hour: f64,
    /// Units priced: dialogues, or session pairs for comparative work.
    pub units: f64,
    pub estimated_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub actual_paid: Option<f64>,
    pub records: usize,
}

/// `throughput = 60 / median`, `cost = median * units / 60 * wage`.
pub fn cost_row(name: &str, median_minutes: f64, units: f64, wage_per_hour: f64) -> CostRow {
    CostRow {
        name: name.into(),
        kind: "method",
        median_minutes,
        throughput_per_hour: 60.0 / median_minutes,
        units,
        estimated_cost: median_minutes * units / 60.0 * wage_per_hour,
        actual_paid: None,
        records: 0,
    }
}

/// Median of finite values; `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub dialogues: usize,
    pub wage_per_hour: f64,
    pub tasks: Vec<CostRow>,
    pub methods: Vec<CostRow>,
}

impl CostReport {
    pub fn method(&self, name: &str) -> Option<&CostRow> {
        self.methods.iter().find(|r| r.name == name)
    }

    pub fn task(&self, name: &str) -> Option<&CostRow> {
        self.tasks.iter().find(|r| r.name == name)
    }

    pub fn to_csv(&self) -> String {
        let rows = self
            .tasks
            .iter()
            .chain(&self.methods)
            .map(|r| {
                vec![
                    r.name.clone(),
                    r.kind.into(),
                    r.median_minutes.to_string(),
                    r.throughput_per_hour.to_string(),
                    r.units.to_string(),
                    r.estimated_cost.to_string(),
                    cell(r.actual_paid),
                    r.records.to_string(),
                ]
            })
            .collect();
        csv_string(
            &["name", "kind", "median_minutes", "throughput_per_hour", "units", "estimated_cost", "actual_paid", "records"],
            rows,
        )
    }
}

pub const ABC_ALL: &str = "abc_eval_all";
pub const ABC_FINAL: &str = "abc_eval_final";

/// Per-task medians of record durations, plus method rows whose median is
/// the sum of their task medians. Behavior labeling is reported over all
/// its tasks and over the tasks holding final-set labels. Tasks without
/// timed records are omitted, and a method row needs all of its tasks.
pub fn cost_analysis(snapshot: &CampaignSnapshot, n_dialogues: usize, wage_per_hour: f64) -> CostReport {
    let schema = snapshot.corpus.schema();
    let mut durations: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in &snapshot.records {
        durations.entry(r.task_key.as_str()).or_default().push(r.duration / 60.0);
    }
    let units_for = |unit: Unit| if unit == Unit::PerPair { n_dialogues as f64 / 2.0 } else { n_dialogues as f64 };
    let mut tasks = Vec::new();
    for t in &schema.tasks {
        let Some(d) = durations.get(t.key.as_str()) else { continue };
        let Some(m) = median(d) else { continue };
        if m <= 0.0 {
            continue;
        }
        let mut row = cost_row(&t.key, m, units_for(t.unit), wage_per_hour);
        row.kind = "task";
        row.records = d.len();
        row.actual_paid = Some(t.payment_usd * d.len() as f64);
        tasks.push(row);
    }
    let group = |name: &str, keys: Vec<&str>| -> Option<CostRow> {
        let rows: Vec<&CostRow> = keys.iter().map(|k| tasks.iter().find(|r| r.name == *k)).collect::<Option<Vec<_>>>()?;
        if rows.is_empty() {
            return None;
        }
        let m: f64 = rows.iter().map(|r| r.median_minutes).sum();
        let units = rows[0].units;
        let mut row = cost_row(name, m, units, wage_per_hour);
        row.records = rows.iter().map(|r| r.records).sum();
        row.actual_paid = Some(rows.iter().filter_map(|r| r.actual_paid).sum());
        Some(row)
    };
    let mut methods = Vec::new();
    for method in [Method::DialogueLikert, Method::Comparative, Method::TurnLikert] {
        if let Some(r) = group(method.as_str(), schema.tasks_for(method).map(|t| t.key.as_str()).collect()) {
            methods.push(r);
        }
    }
    if let Some(r) = group(ABC_ALL, schema.tasks_for(Method::AbcEval).map(|t| t.key.as_str()).collect()) {
        methods.push(r);
    }
    let final_tasks: Vec<&str> = schema
        .tasks_for(Method::AbcEval)
        .filter(|t| t.labels.iter().any(|l| schema.label(l).is_some_and(|d| d.in_final_set)))
        .map(|t| t.key.as_str())
        .collect();
    if let Some(mut r) = group(ABC_FINAL, final_tasks) {
        // the final set is a projection; what was paid covers every task
        r.actual_paid = None;
        methods.push(r);
    }
    CostReport { dialogues: n_dialogues, wage_per_hour, tasks, methods }
}
