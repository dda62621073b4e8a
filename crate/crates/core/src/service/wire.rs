//! JSON bodies of the HTTP API. Responses that reuse campaign types
//! (assignments, training steps, submissions) serialize those directly.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::analysis::{AnalysisOptions, BundleManifest};
use crate::campaign::{Annotator, Role, TrainingState};
use crate::corpus::{Method, Unit, Widget};
use crate::metrics::{Payload, TurnAnswer};

pub const API_VERSION: &str = "v1";
pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";

/// Every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Health {
    pub status: String,
    pub api: String,
    pub version: String,
    /// sha256 over the crate version and the builtin schema.
    pub build_digest: String,
    pub campaign_digest: String,
    pub corpus_digest: String,
    pub schema_digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateAnnotator {
    pub id: String,
    #[serde(default)]
    pub display_name: Option<String>,
    /// Token lifetime; the campaign default when absent.
    #[serde(default)]
    pub token_ttl_secs: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Token {
    pub token: String,
    pub role: Role,
    pub annotator_id: Option<String>,
    pub expires_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatorCreated {
    pub annotator: Annotator,
    pub token: Token,
}

/// One task as a client needs it to render and gate work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskDescriptor {
    pub key: String,
    pub method: Method,
    pub labels: Vec<String>,
    pub widget: Widget,
    pub unit: Unit,
    pub payment_usd: f64,
    pub requires_training: bool,
    /// Caller's training state; absent for tasks without training.
    pub training: Option<TrainingState>,
    /// Whether the caller may request assignments now.
    pub workable: bool,
    pub cap: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskList {
    pub annotator_id: String,
    pub tasks: Vec<TaskDescriptor>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSubmit {
    pub round: u8,
    pub responses: Vec<TurnAnswer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationSubmit {
    pub assignment_id: String,
    pub payload: Payload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Running,
    Succeeded,
    Failed,
}

/// Analysis job as polled from `GET /v1/analyses/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisJob {
    pub id: String,
    pub state: JobState,
    pub options: AnalysisOptions,
    pub started_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
    /// Bundle directory on the server.
    pub bundle: Option<String>,
    pub manifest: Option<BundleManifest>,
    /// Analysis results as JSON once succeeded.
    pub results: Option<serde_json::Value>,
    pub error: Option<ErrorBody>,
}
