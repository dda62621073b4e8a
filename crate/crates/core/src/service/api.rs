use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;

use super::jobs::{JobError, Jobs};
use super::wire::{
    AnalysisJob, AnnotationSubmit, AnnotatorCreated, CreateAnnotator, ErrorBody, Health, TaskDescriptor, TaskList, Token,
    TrainingSubmit, API_VERSION, IDEMPOTENCY_HEADER,
};
use crate::analysis::AnalysisOptions;
use crate::campaign::{AuthError, CampaignError, ErrorKind, ExportFilter, Principal, Role, Store};
use crate::corpus::builtin_schema;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    jobs: Arc<Jobs>,
}

impl AppState {
    /// Bundles from analysis jobs are written under `reports_dir/<job id>`.
    pub fn new(store: Arc<Store>, reports_dir: PathBuf) -> Self {
        Self { store, jobs: Arc::new(Jobs::new(reports_dir)) }
    }
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, body: ErrorBody { code: code.into(), message: message.into() } }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

pub(crate) fn status_for(kind: ErrorKind) -> StatusCode {
    match kind {
        ErrorKind::Invalid => StatusCode::BAD_REQUEST,
        ErrorKind::NotFound => StatusCode::NOT_FOUND,
        ErrorKind::Conflict => StatusCode::CONFLICT,
        ErrorKind::Forbidden => StatusCode::FORBIDDEN,
        ErrorKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<CampaignError> for ApiError {
    fn from(e: CampaignError) -> Self {
        if e.kind() == ErrorKind::Internal {
            tracing::error!(error = %e, "campaign store failure");
        }
        ApiError::new(status_for(e.kind()), e.code(), e.to_string())
    }
}

impl From<AuthError> for ApiError {
    fn from(e: AuthError) -> Self {
        let (status, code) = match e {
            AuthError::Missing => (StatusCode::UNAUTHORIZED, "missing_token"),
            AuthError::UnknownToken => (StatusCode::UNAUTHORIZED, "unknown_token"),
            AuthError::Expired => (StatusCode::UNAUTHORIZED, "token_expired"),
            AuthError::Forbidden => (StatusCode::FORBIDDEN, "forbidden"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<JobError> for ApiError {
    fn from(e: JobError) -> Self {
        match e {
            JobError::Busy(id) => ApiError::new(StatusCode::CONFLICT, "analysis_running", format!("analysis {id} is still running")),
            JobError::Unknown(id) => ApiError::new(StatusCode::NOT_FOUND, "unknown_analysis", format!("unknown analysis {id:?}")),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_json<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_json", e.to_string()))
}

fn principal(state: &AppState, headers: &HeaderMap) -> ApiResult<Principal> {
    let value = headers.get(header::AUTHORIZATION).ok_or(AuthError::Missing)?;
    let token = value.to_str().ok().and_then(|v| v.strip_prefix("Bearer ")).map(str::trim).ok_or(AuthError::Missing)?;
    Ok(state.store.authenticate(token)?)
}

fn admin(state: &AppState, headers: &HeaderMap) -> ApiResult<Principal> {
    let p = principal(state, headers)?;
    if p.role != Role::Admin {
        return Err(AuthError::Forbidden.into());
    }
    Ok(p)
}

fn annotator(state: &AppState, headers: &HeaderMap) -> ApiResult<String> {
    let p = principal(state, headers)?;
    match (p.role, p.annotator_id) {
        (Role::Annotator, Some(id)) => Ok(id),
        _ => Err(AuthError::Forbidden.into()),
    }
}

/// Runs store work off the async workers; appends may fsync.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

pub fn build_digest() -> String {
    crate::campaign::sha256_hex(format!("{}\u{1f}{}", env!("CARGO_PKG_VERSION"), builtin_schema().to_json()).as_bytes())
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    let store = &state.store;
    Json(Health {
        status: "ok".into(),
        api: API_VERSION.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        build_digest: build_digest(),
        campaign_digest: store.digest().into(),
        corpus_digest: store.corpus().digest(),
        schema_digest: store.schema().digest(),
    })
}

async fn create_annotator(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<(StatusCode, Json<AnnotatorCreated>)> {
    admin(&state, &headers)?;
    let req: CreateAnnotator = parse_json(&body)?;
    let store = state.store.clone();
    blocking(move || {
        let annotator = store.create_annotator(&req.id, req.display_name.as_deref().unwrap_or(&req.id))?;
        let t = store.mint_token(Some(&annotator.id), req.token_ttl_secs)?;
        let token = Token { token: t.token, role: t.role, annotator_id: t.annotator_id, expires_at: t.expires_at };
        Ok((StatusCode::CREATED, Json(AnnotatorCreated { annotator, token })))
    })
    .await
}

async fn tasks(State(state): State<AppState>, headers: HeaderMap) -> ApiResult<Json<TaskList>> {
    let id = annotator(&state, &headers)?;
    let store = &state.store;
    let workable = store.workable_tasks(&id);
    let tasks = store
        .schema()
        .tasks
        .iter()
        .map(|t| TaskDescriptor {
            key: t.key.clone(),
            method: t.method,
            labels: t.labels.clone(),
            widget: t.widget.clone(),
            unit: t.unit,
            payment_usd: t.payment_usd,
            requires_training: t.requires_training,
            training: t.requires_training.then(|| store.training_state(&id, &t.key)),
            workable: workable.contains(&t.key),
            cap: store.config().cap(&t.key),
        })
        .collect();
    Ok(Json(TaskList { annotator_id: id, tasks }))
}

async fn training_next(State(state): State<AppState>, headers: HeaderMap, Path(task): Path<String>) -> ApiResult<Response> {
    let id = annotator(&state, &headers)?;
    Ok(Json(state.store.next_training(&id, &task)?).into_response())
}

async fn training_submit(State(state): State<AppState>, headers: HeaderMap, Path(task): Path<String>, body: Bytes) -> ApiResult<Response> {
    let id = annotator(&state, &headers)?;
    let req: TrainingSubmit = parse_json(&body)?;
    let store = state.store.clone();
    blocking(move || Ok(Json(store.submit_training(&id, &task, req.round, &req.responses)?).into_response())).await
}

async fn assignment_next(State(state): State<AppState>, headers: HeaderMap, Query(q): Query<HashMap<String, String>>) -> ApiResult<Response> {
    let id = annotator(&state, &headers)?;
    let task = q
        .get("task")
        .filter(|t| !t.is_empty())
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "invalid_input", "query parameter `task` is required"))?;
    let store = state.store.clone();
    blocking(move || Ok(Json(store.assign(&id, &task)?).into_response())).await
}

async fn submit_annotation(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let id = annotator(&state, &headers)?;
    let key = match headers.get(IDEMPOTENCY_HEADER) {
        Some(v) => Some(
            v.to_str()
                .ok()
                .filter(|k| !k.is_empty() && k.len() <= 256)
                .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "invalid_input", "bad Idempotency-Key header"))?
                .to_string(),
        ),
        None => None,
    };
    let req: AnnotationSubmit = parse_json(&body)?;
    let store = state.store.clone();
    blocking(move || {
        let s = store.submit_annotation(&id, &req.assignment_id, req.payload, key.as_deref())?;
        let status = if s.replayed { StatusCode::OK } else { StatusCode::CREATED };
        Ok((status, Json(s)).into_response())
    })
    .await
}

async fn export(State(state): State<AppState>, headers: HeaderMap, Query(q): Query<HashMap<String, String>>) -> ApiResult<Response> {
    admin(&state, &headers)?;
    let filter = ExportFilter { task: q.get("task").cloned(), annotator: q.get("annotator").cloned() };
    if let Some(t) = &filter.task {
        if state.store.schema().task(t).is_none() {
            return Err(CampaignError::UnknownTask(t.clone()).into());
        }
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], state.store.export(&filter)).into_response())
}

async fn start_analysis(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<(StatusCode, Json<AnalysisJob>)> {
    admin(&state, &headers)?;
    let opts: AnalysisOptions = if body.iter().all(u8::is_ascii_whitespace) { AnalysisOptions::default() } else { parse_json(&body)? };
    let job = state.jobs.start(state.store.clone(), opts)?;
    Ok((StatusCode::ACCEPTED, Json(job)))
}

async fn get_analysis(State(state): State<AppState>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Json<AnalysisJob>> {
    admin(&state, &headers)?;
    Ok(Json(state.jobs.get(&id)?))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed on this route")
}

async fn log_requests(req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let path = req.uri().path().to_string();
    let start = Instant::now();
    let resp = next.run(req).await;
    tracing::info!(%method, %path, status = resp.status().as_u16(), ms = start.elapsed().as_secs_f64() * 1e3, "request");
    resp
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/annotators", post(create_annotator))
        .route("/v1/tasks", get(tasks))
        .route("/v1/training/{task}/next", get(training_next))
        .route("/v1/training/{task}/submit", post(training_submit))
        .route("/v1/assignments/next", get(assignment_next))
        .route("/v1/annotations", post(submit_annotation))
        .route("/v1/export", get(export))
        .route("/v1/analyses", post(start_analysis))
        .route("/v1/analyses/{id}", get(get_analysis))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(middleware::from_fn(log_requests))
        .with_state(state)
}
