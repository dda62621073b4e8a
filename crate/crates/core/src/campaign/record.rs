//! Annotation records and the JSON Lines export format.

use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::metrics::Payload;

pub const EXPORT_FORMAT: &str = "abceval.annotations";
pub const EXPORT_VERSION: u32 = 1;

/// One annotator's output for one (conversation or pair, task).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub annotator_id: String,
    pub task_key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conversation_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
    pub payload: Payload,
    pub submitted_at: DateTime<Utc>,
    /// Seconds between assignment and submission.
    pub duration: f64,
}

impl AnnotationRecord {
    /// Conversation id, or pair id for pair-scoped tasks.
    pub fn target(&self) -> &str {
        self.conversation_id.as_deref().or(self.pair_id.as_deref()).unwrap_or("")
    }

    pub fn sort_key(&self) -> (&str, &str, &str) {
        (&self.task_key, self.target(), &self.annotator_id)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportFilter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<String>,
}

impl ExportFilter {
    pub fn matches(&self, r: &AnnotationRecord) -> bool {
        self.task.as_deref().is_none_or(|t| t == r.task_key) && self.annotator.as_deref().is_none_or(|a| a == r.annotator_id)
    }
}

/// First line of an export file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportHeader {
    pub format: String,
    pub version: u32,
    pub schema_digest: String,
    pub filter: ExportFilter,
    pub count: usize,
}

/// Sorted JSON Lines export of the records matching `filter`.
pub fn export_records<'a>(
    records: impl IntoIterator<Item = &'a AnnotationRecord>,
    filter: &ExportFilter,
    schema_digest: &str,
) -> String {
    let mut selected: Vec<&AnnotationRecord> = records.into_iter().filter(|r| filter.matches(r)).collect();
    selected.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let header = ExportHeader {
        format: EXPORT_FORMAT.into(),
        version: EXPORT_VERSION,
        schema_digest: schema_digest.into(),
        filter: filter.clone(),
        count: selected.len(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for r in selected {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

#[derive(Debug, thiserror::Error)]
pub enum ImportError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
}

pub fn parse_export(text: &str) -> Result<(ExportHeader, Vec<AnnotationRecord>), ImportError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or(ImportError::Line { line: 1, message: "missing export header".into() })?;
    let header: ExportHeader =
        serde_json::from_str(first).map_err(|e| ImportError::Line { line: 1, message: format!("bad header: {e}") })?;
    if header.format != EXPORT_FORMAT || header.version != EXPORT_VERSION {
        return Err(ImportError::Line { line: 1, message: format!("unsupported format {} v{}", header.format, header.version) });
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let r: AnnotationRecord =
            serde_json::from_str(line).map_err(|e| ImportError::Line { line: i + 1, message: e.to_string() })?;
        records.push(r);
    }
    if records.len() != header.count {
        return Err(ImportError::Line {
            line: text.lines().count(),
            message: format!("header announces {} records, found {}", header.count, records.len()),
        });
    }
    Ok((header, records))
}

pub fn import_export_file(path: &Path) -> Result<(ExportHeader, Vec<AnnotationRecord>), ImportError> {
    parse_export(&std::fs::read_to_string(path)?)
}
