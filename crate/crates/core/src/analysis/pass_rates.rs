//! Screening pass rates per task.

use std::collections::BTreeMap;

use serde::Serialize;

use super::csv_string;
use crate::campaign::{CampaignSnapshot, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassRate {
    pub task_key: String,
    pub passed: usize,
    pub failed: usize,
    pub rate: f64,
}

/// `passed / (passed + failed)` for tasks with a completed screening, in
/// schema task order.
pub fn training_pass_rates(snapshot: &CampaignSnapshot) -> Vec<PassRate> {
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (_, st) in &snapshot.training {
        let c = counts.entry(st.task_key.as_str()).or_default();
        match st.verdict {
            Verdict::Passed => c.0 += 1,
            Verdict::Failed => c.1 += 1,
            Verdict::InProgress => {}
        }
    }
    snapshot
        .corpus
        .schema()
        .tasks
        .iter()
        .filter_map(|t| {
            let &(passed, failed) = counts.get(t.key.as_str())?;
            (passed + failed > 0).then(|| PassRate { task_key: t.key.clone(), passed, failed, rate: passed as f64 / (passed + failed) as f64 })
        })
        .collect()
}

pub(crate) fn pass_rates_csv(rows: &[PassRate]) -> String {
    let rows = rows.iter().map(|r| vec![r.task_key.clone(), r.passed.to_string(), r.failed.to_string(), r.rate.to_string()]).collect();
    csv_string(&["task", "passed", "failed", "rate"], rows)
}
