//! Annotation campaigns: configuration, training and screening,
//! assignment, submission and the persistent store.

mod plan;
mod record;
mod store;
mod training;

use std::sync::Mutex;

use chrono::{DateTime, Utc};

pub use plan::{record_target_in, CampaignConfig, CoveragePlan, DEFAULT_ASSIGNMENT_TTL_SECS, DEFAULT_CAP, DEFAULT_DOUBLE_PAIRS, DEFAULT_TOKEN_TTL_SECS};
pub use record::{
    export_records, import_export_file, parse_export, AnnotationRecord, ExportFilter, ExportHeader, ImportError, EXPORT_FORMAT,
    EXPORT_VERSION,
};
pub(crate) use store::{sha256_hex, write_atomic};
pub use store::{
    Annotator, Assignment, AssignmentState, CampaignSnapshot, CampaignStatus, Durability, Event, MintedToken, Principal, Role, Store,
    StoreOptions, Submission, TaskStatus, TrainingCounts, TrainingStep,
};
pub use training::{
    load_gold_bundle, score_round, screening_verdict, Disagreement, GoldBundle, GoldConversation, GoldTurn, TrainingFeedback,
    TrainingRound, TrainingState, Verdict, TRAINING_ROUNDS,
};

use crate::corpus::CorpusError;
use crate::metrics::ResponseError;

pub type Result<T> = std::result::Result<T, CampaignError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum AuthError {
    #[error("missing bearer token")]
    Missing,
    #[error("unknown token")]
    UnknownToken,
    #[error("token expired")]
    Expired,
    #[error("token lacks the required role")]
    Forbidden,
}

/// Broad category of a failure, used for HTTP statuses and exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Invalid,
    NotFound,
    Conflict,
    Forbidden,
    Internal,
}

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("corrupt store: {0}")]
    Corrupt(String),
    #[error("store {0} is locked by another process")]
    Locked(String),
    #[error("store opened read-only")]
    ReadOnly,
    #[error("{0} already exists")]
    AlreadyExists(String),
    #[error("{0} holds no campaign; run campaign create first")]
    NotInitialized(String),
    #[error(transparent)]
    Config(CorpusError),
    #[error("{0}")]
    InvalidInput(String),
    #[error("unknown annotator {0:?}")]
    UnknownAnnotator(String),
    #[error("annotator {0:?} already exists")]
    DuplicateAnnotator(String),
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error("task {0:?} has no training")]
    NoTraining(String),
    #[error("no gold bundle loaded for task {0:?}")]
    NoTrainingMaterial(String),
    #[error("screening failed for task {0:?}")]
    ScreeningFailed(String),
    #[error("training for task {0:?} is already complete")]
    TrainingComplete(String),
    #[error("expected training round {expected}, got {got}")]
    WrongRound { expected: u8, got: u8 },
    #[error("training for task {0:?} not passed")]
    TrainingNotPassed(String),
    #[error("cap of {cap} annotations reached for task {task:?}")]
    CapReached { task: String, cap: u32 },
    #[error("nothing left to assign for task {0:?}")]
    NothingEligible(String),
    #[error("unknown assignment {0:?}")]
    UnknownAssignment(String),
    #[error("assignment {0:?} already submitted")]
    AlreadySubmitted(String),
    #[error("assignment {0:?} expired")]
    AssignmentExpired(String),
    #[error(transparent)]
    InvalidPayload(ResponseError),
}

impl CampaignError {
    pub fn kind(&self) -> ErrorKind {
        use CampaignError::*;
        match self {
            Io { .. } | Corrupt(_) | Locked(_) | ReadOnly => ErrorKind::Internal,
            AlreadyExists(_) | DuplicateAnnotator(_) | TrainingComplete(_) | WrongRound { .. } | CapReached { .. }
            | NothingEligible(_) | AlreadySubmitted(_) | AssignmentExpired(_) => ErrorKind::Conflict,
            NotInitialized(_) | UnknownAnnotator(_) | UnknownTask(_) | NoTraining(_) | NoTrainingMaterial(_) | UnknownAssignment(_) => {
                ErrorKind::NotFound
            }
            ScreeningFailed(_) | TrainingNotPassed(_) => ErrorKind::Forbidden,
            Config(_) | InvalidInput(_) | InvalidPayload(_) => ErrorKind::Invalid,
        }
    }

    /// Stable machine-readable code for wire errors.
    pub fn code(&self) -> &'static str {
        use CampaignError::*;
        match self {
            Io { .. } => "io",
            Corrupt(_) => "corrupt_store",
            Locked(_) => "store_locked",
            ReadOnly => "read_only",
            AlreadyExists(_) => "already_exists",
            NotInitialized(_) => "not_initialized",
            Config(_) => "invalid_config",
            InvalidInput(_) => "invalid_input",
            UnknownAnnotator(_) => "unknown_annotator",
            DuplicateAnnotator(_) => "duplicate_annotator",
            UnknownTask(_) => "unknown_task",
            NoTraining(_) => "no_training",
            NoTrainingMaterial(_) => "no_training_material",
            ScreeningFailed(_) => "screening_failed",
            TrainingComplete(_) => "training_complete",
            WrongRound { .. } => "wrong_round",
            TrainingNotPassed(_) => "training_not_passed",
            CapReached { .. } => "cap_reached",
            NothingEligible(_) => "nothing_eligible",
            UnknownAssignment(_) => "unknown_assignment",
            AlreadySubmitted(_) => "already_submitted",
            AssignmentExpired(_) => "assignment_expired",
            InvalidPayload(_) => "invalid_payload",
        }
    }
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Clock that only moves when told to.
pub struct ManualClock(Mutex<DateTime<Utc>>);

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        Self(Mutex::new(start))
    }

    pub fn advance(&self, secs: f64) {
        let mut t = self.0.lock().unwrap_or_else(|p| p.into_inner());
        *t += chrono::Duration::milliseconds((secs * 1000.0).round() as i64);
    }

    pub fn set(&self, at: DateTime<Utc>) {
        *self.0.lock().unwrap_or_else(|p| p.into_inner()) = at;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().unwrap_or_else(|p| p.into_inner())
    }
}
