//! HTTP review API under `/api/v1`.
//!
//! Reads go straight to the artifact store. Mutations take the project's
//! file lock; a decision arriving while another writer holds it is logged
//! and picked up by that writer.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use greenreq_core::review::{ReviewAction, ReviewStage};

use crate::error::{DecisionError, WorkbenchError};
use crate::pipeline::{Options, Outcome, Project, Wait};
use crate::report::build_report;
use crate::review::{
    list_reviews, now_timestamp, prepare_decision, review_detail, DecisionRequest, ReviewFilter,
};
use crate::store::StoreError;

pub const API_PREFIX: &str = "/api/v1";

/// One served project and its runtime status.
pub struct ProjectHandle {
    pub project: Project,
    running: AtomicBool,
    last_error: Mutex<Option<String>>,
}

impl ProjectHandle {
    pub fn new(project: Project) -> Self {
        Self {
            project,
            running: AtomicBool::new(false),
            last_error: Mutex::new(None),
        }
    }

    pub fn running(&self) -> bool {
        self.running.load(Ordering::SeqCst)
    }

    fn set_error(&self, e: Option<String>) {
        *self.last_error.lock().expect("last_error") = e;
    }

    fn options(&self) -> Options {
        Options {
            wait: Wait::Return,
            ..Options::from_config(&self.project.config)
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    projects: Arc<BTreeMap<String, Arc<ProjectHandle>>>,
}

impl AppState {
    pub fn new(projects: Vec<Project>) -> Self {
        Self {
            projects: Arc::new(
                projects
                    .into_iter()
                    .map(|p| (p.id().to_string(), Arc::new(ProjectHandle::new(p))))
                    .collect(),
            ),
        }
    }

    fn project(&self, id: &str) -> Result<Arc<ProjectHandle>, ApiError> {
        self.projects.get(id).cloned().ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "not_found",
                format!("no project {id}"),
            )
        })
    }

    /// The project that owns a review id.
    fn review_owner(&self, review_id: &str) -> Result<Arc<ProjectHandle>, ApiError> {
        for h in self.projects.values() {
            if let Ok(st) = h.project.state() {
                if st.review(review_id).is_some() {
                    return Ok(h.clone());
                }
            }
        }
        Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("no review {review_id}"),
        ))
    }
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/projects", get(list_projects))
        .route("/projects/{id}/status", get(project_status))
        .route("/projects/{id}/reviews", get(project_reviews))
        .route("/projects/{id}/report", get(project_report))
        .route("/projects/{id}/run", post(run_project))
        .route("/reviews/{id}", get(get_review))
        .route("/reviews/{id}/decision", post(post_decision));
    Router::new().nest(API_PREFIX, api).with_state(state)
}

pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{}{API_PREFIX}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }
}

impl From<WorkbenchError> for ApiError {
    fn from(e: WorkbenchError) -> Self {
        let (status, code) = match &e {
            WorkbenchError::Decision(DecisionError::NotFound(_)) => {
                (StatusCode::NOT_FOUND, "not_found")
            }
            WorkbenchError::Decision(DecisionError::Conflict(_)) => {
                (StatusCode::CONFLICT, "conflict")
            }
            WorkbenchError::Decision(DecisionError::Invalid(_)) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "invalid")
            }
            WorkbenchError::Store(StoreError::DuplicateDecision(_)) => {
                (StatusCode::CONFLICT, "conflict")
            }
            WorkbenchError::Store(StoreError::Busy(_)) => (StatusCode::CONFLICT, "busy"),
            WorkbenchError::Store(StoreError::NotInitialized(_))
            | WorkbenchError::StageOrder(_) => (StatusCode::CONFLICT, "stage_order"),
            WorkbenchError::Config(_) => (StatusCode::INTERNAL_SERVER_ERROR, "config"),
            WorkbenchError::Provider { .. } => (StatusCode::BAD_GATEWAY, "provider"),
            WorkbenchError::ReviewTimeout(_) => (StatusCode::CONFLICT, "awaiting_review"),
            WorkbenchError::Store(_) | WorkbenchError::Data(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "data")
            }
        };
        Self::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({"error": {"code": self.code, "message": self.message}})),
        )
            .into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Run blocking store and pipeline work off the async executor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

pub fn outcome_json(o: &Outcome) -> Value {
    match o {
        Outcome::Ran => json!({"result": "ran"}),
        Outcome::UpToDate => json!({"result": "up_to_date"}),
        Outcome::AwaitingReview(ids) => json!({"result": "awaiting_review", "pending": ids}),
    }
}

async fn list_projects(State(app): State<AppState>) -> ApiResult<Json<Value>> {
    blocking(move || {
        let mut out = Vec::new();
        for (id, h) in app.projects.iter() {
            let (stage, pending) = match h.project.state() {
                Ok(st) => (Some(st.stage), st.pending_reviews().count()),
                Err(_) => (None, 0),
            };
            out.push(json!({
                "project_id": id,
                "initialized": stage.is_some(),
                "stage": stage,
                "pending_reviews": pending,
                "running": h.running(),
            }));
        }
        Ok(Json(json!({"projects": out})))
    })
    .await
}

async fn project_status(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let h = app.project(&id)?;
    blocking(move || {
        let st = h.project.state()?;
        let pending: Vec<_> = st.pending_reviews().cloned().collect();
        Ok(Json(json!({
            "project_id": st.project_id,
            "schema_version": st.schema_version,
            "stage": st.stage,
            "steps": st.steps,
            "artifacts": st.artifacts,
            "pending_reviews": pending,
            "running": h.running(),
            "last_error": *h.last_error.lock().expect("last_error"),
        })))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct ReviewQuery {
    #[serde(default)]
    state: ReviewFilter,
}

async fn project_reviews(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ReviewQuery>,
) -> ApiResult<Json<Value>> {
    let h = app.project(&id)?;
    blocking(move || {
        let st = h.project.state()?;
        Ok(Json(
            json!({"reviews": list_reviews(&h.project, &st, q.state)}),
        ))
    })
    .await
}

async fn project_report(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let h = app.project(&id)?;
    blocking(move || {
        let st = h.project.state()?;
        let report = build_report(&h.project, &st)?;
        Ok(Json(
            serde_json::to_value(report).expect("report serializes"),
        ))
    })
    .await
}

async fn get_review(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let h = app.review_owner(&id)?;
    blocking(move || {
        let st = h.project.state()?;
        Ok(Json(review_detail(&h.project, &st, &id)?))
    })
    .await
}

#[derive(Debug, Serialize)]
struct Accepted {
    status: &'static str,
}

/// Run `work` with the project lock in a background thread, then apply
/// any decisions that were logged meanwhile.
fn spawn_writer(
    h: Arc<ProjectHandle>,
    lock: crate::store::ProjectLock,
    work: impl FnOnce(&ProjectHandle) -> crate::pipeline::Result<Outcome> + Send + 'static,
) {
    h.running.store(true, Ordering::SeqCst);
    tokio::task::spawn_blocking(move || {
        let result = work(&h).and_then(|_| drain(&h));
        h.set_error(result.err().map(|e| e.to_string()));
        h.running.store(false, Ordering::SeqCst);
        drop(lock);
    });
}

/// Resume stages while logged decisions are waiting to be applied.
fn drain(h: &ProjectHandle) -> crate::pipeline::Result<Outcome> {
    let mut last = Outcome::UpToDate;
    for _ in 0..16 {
        let stages = h.project.actionable_stages()?;
        let Some(stage) = stages.first() else {
            break;
        };
        last = h.project.resume(*stage, &h.options())?;
    }
    Ok(last)
}

async fn run_project(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let h = app.project(&id)?;
    let lock = h.project.store.try_lock().map_err(WorkbenchError::from)?;
    spawn_writer(h, lock, |h| h.project.run_all(&h.options()));
    Ok((StatusCode::ACCEPTED, Json(Accepted { status: "running" })).into_response())
}

async fn post_decision(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<DecisionRequest>, axum::extract::rejection::JsonRejection>,
) -> ApiResult<Response> {
    let Json(req) = body
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", e.body_text()))?;
    let h = app.review_owner(&id)?;
    blocking(move || {
        let lock = match h.project.store.try_lock() {
            Ok(l) => Some(l),
            Err(StoreError::Busy(_)) => None,
            Err(e) => return Err(WorkbenchError::from(e).into()),
        };
        let st = h.project.state()?;
        let decision = prepare_decision(&h.project, &st, &id, req, now_timestamp())?;
        h.project.store.append_decision(&decision).map_err(WorkbenchError::from)?;
        let Some(lock) = lock else {
            return Ok((StatusCode::ACCEPTED, Json(json!({"status": "queued", "decision": decision}))).into_response());
        };
        let stage = decision.stage;
        if decision.action == ReviewAction::RequestChanges {
            // Regeneration calls the model again; report progress via status.
            spawn_writer(h.clone(), lock, move |h| resume(h, stage));
            return Ok(
                (StatusCode::ACCEPTED, Json(json!({"status": "running", "decision": decision}))).into_response(),
            );
        }
        h.running.store(true, Ordering::SeqCst);
        let result = resume(&h, stage).and_then(|o| drain(&h).map(|d| if d == Outcome::UpToDate { o } else { d }));
        h.running.store(false, Ordering::SeqCst);
        drop(lock);
        let st = h.project.state()?;
        let body = match result {
            Ok(outcome) => {
                h.set_error(None);
                json!({"status": "applied", "decision": decision, "outcome": outcome_json(&outcome), "stage": st.stage})
            }
            Err(e) => {
                h.set_error(Some(e.to_string()));
                json!({"status": "failed", "decision": decision, "error": e.to_string(), "stage": st.stage})
            }
        };
        Ok((StatusCode::OK, Json(body)).into_response())
    })
    .await
}

fn resume(h: &ProjectHandle, stage: ReviewStage) -> crate::pipeline::Result<Outcome> {
    h.project.resume(stage, &h.options())
}
