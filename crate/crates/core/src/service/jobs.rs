//! Background analysis jobs; at most one runs at a time.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use super::wire::{AnalysisJob, ErrorBody, JobState};
use crate::analysis::{run_analyses, write_bundle, AnalysisError, AnalysisOptions};
use crate::campaign::Store;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JobError {
    Busy(String),
    Unknown(String),
}

#[derive(Default)]
struct Inner {
    next: u64,
    running: Option<String>,
    jobs: BTreeMap<String, AnalysisJob>,
}

pub struct Jobs {
    reports_dir: PathBuf,
    inner: Arc<Mutex<Inner>>,
}

fn error_body(e: &AnalysisError) -> ErrorBody {
    let code = match e {
        AnalysisError::Invalid(_) | AnalysisError::Metric(_) | AnalysisError::Stat(_) => "analysis_invalid",
        AnalysisError::Io { .. } => "io",
    };
    ErrorBody { code: code.into(), message: e.to_string() }
}

impl Jobs {
    pub fn new(reports_dir: PathBuf) -> Self {
        Self { reports_dir, inner: Arc::new(Mutex::new(Inner::default())) }
    }

    /// Snapshots the campaign now and analyses it on a worker thread.
    pub fn start(&self, store: Arc<Store>, options: AnalysisOptions) -> Result<AnalysisJob, JobError> {
        let mut inner = self.inner.lock().expect("jobs lock");
        if let Some(id) = &inner.running {
            return Err(JobError::Busy(id.clone()));
        }
        inner.next += 1;
        let id = format!("analysis-{}", inner.next);
        let job = AnalysisJob {
            id: id.clone(),
            state: JobState::Running,
            options: options.clone(),
            started_at: store.now(),
            finished_at: None,
            bundle: None,
            manifest: None,
            results: None,
            error: None,
        };
        inner.running = Some(id.clone());
        inner.jobs.insert(id.clone(), job.clone());
        drop(inner);

        let snapshot = store.snapshot();
        let out = self.reports_dir.join(&id);
        let shared = self.inner.clone();
        std::thread::spawn(move || {
            let outcome = run_analyses(&snapshot, &options).and_then(|r| {
                let manifest = write_bundle(&snapshot, &options, &r, &out)?;
                Ok((r, manifest))
            });
            let mut inner = shared.lock().expect("jobs lock");
            inner.running = None;
            let job = inner.jobs.get_mut(&id).expect("job registered");
            job.finished_at = Some(store.now());
            match outcome {
                Ok((results, manifest)) => {
                    job.state = JobState::Succeeded;
                    job.bundle = Some(out.display().to_string());
                    job.manifest = Some(manifest);
                    job.results = Some(serde_json::to_value(&results).expect("results serialize"));
                }
                Err(e) => {
                    tracing::warn!(job = %id, error = %e, "analysis failed");
                    job.state = JobState::Failed;
                    job.error = Some(error_body(&e));
                }
            }
        });
        Ok(job)
    }

    pub fn get(&self, id: &str) -> Result<AnalysisJob, JobError> {
        self.inner.lock().expect("jobs lock").jobs.get(id).cloned().ok_or_else(|| JobError::Unknown(id.into()))
    }
}
