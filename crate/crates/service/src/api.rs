use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gazecode_core::log::{Record, TimestampNs};
use gazecode_core::protocol::Code;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;
use tower_http::trace::TraceLayer;

use crate::error::ServiceError;
use crate::session::{EntryAck, EventsAck, SessionDescriptor, SessionSummary, TrialSummary};
use crate::store::{CreateSessionRequest, SessionStore};

pub type AppState = Arc<SessionStore>;

/// JSON body whose rejections use the service's error format.
struct ApiJson<T>(T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ServiceError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(ApiJson(v)),
            Err(JsonRejection::JsonDataError(e)) => {
                Err(ServiceError::Unprocessable { message: e.body_text(), index: None })
            }
            Err(e) => Err(ServiceError::BadRequest(e.body_text())),
        }
    }
}

/// An entered code, as digits (`[4,7,1,1]`) or a string (`"4711"`).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CodeInput {
    Digits(Code),
    Text(String),
}

impl CodeInput {
    fn into_code(self) -> Result<Code, ServiceError> {
        match self {
            CodeInput::Digits(c) => Ok(c),
            CodeInput::Text(s) => s.parse().map_err(|e| ServiceError::Unprocessable {
                message: format!("invalid code '{s}': {e}"),
                index: None,
            }),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryRequest {
    pub entered: CodeInput,
    pub ts: TimestampNs,
    #[serde(default)]
    pub taps: Option<Vec<TimestampNs>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoidRequest {
    #[serde(default)]
    pub reason: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct EventsRequest {
    /// Session-log records, each an object with its `"t"` tag.
    pub records: Vec<serde_json::Value>,
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
}

async fn create_session(
    State(store): State<AppState>,
    body: Bytes,
) -> Result<(StatusCode, Json<SessionDescriptor>), ServiceError> {
    let req: CreateSessionRequest = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSessionRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ServiceError::BadRequest(format!("invalid session request: {e}")))?
    };
    let handle = store.create(req)?;
    let descriptor = handle.lock().descriptor();
    Ok((StatusCode::CREATED, Json(descriptor)))
}

async fn session_summary(State(store): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionSummary>, ServiceError> {
    Ok(Json(store.get(&id)?.lock().summary()))
}

async fn next_trial(State(store): State<AppState>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let spec = store.get(&id)?.lock().next_trial()?;
    Ok(Json(spec).into_response())
}

async fn submit_events(
    State(store): State<AppState>,
    Path((id, tid)): Path<(String, u64)>,
    ApiJson(req): ApiJson<EventsRequest>,
) -> Result<Json<EventsAck>, ServiceError> {
    let records = req
        .records
        .iter()
        .enumerate()
        .map(|(i, v)| Record::from_line(&v.to_string()).map_err(|e| ServiceError::unprocessable_at(i, e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Json(store.get(&id)?.lock().submit_events(tid, records)?))
}

async fn submit_entry(
    State(store): State<AppState>,
    Path((id, tid)): Path<(String, u64)>,
    ApiJson(req): ApiJson<EntryRequest>,
) -> Result<Json<EntryAck>, ServiceError> {
    let code = req.entered.into_code()?;
    Ok(Json(store.get(&id)?.lock().submit_entry(tid, code, req.ts, req.taps)?))
}

async fn void_trial(
    State(store): State<AppState>,
    Path((id, tid)): Path<(String, u64)>,
    body: Bytes,
) -> Result<Json<TrialSummary>, ServiceError> {
    let req: VoidRequest = if body.iter().all(u8::is_ascii_whitespace) {
        VoidRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ServiceError::BadRequest(format!("invalid void request: {e}")))?
    };
    Ok(Json(store.get(&id)?.lock().void_trial(tid, req.reason)?))
}

async fn finalize(State(store): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionSummary>, ServiceError> {
    Ok(Json(store.get(&id)?.lock().finalize()?))
}

async fn export(State(store): State<AppState>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let bytes = store.get(&id)?.lock().export()?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], bytes).into_response())
}

async fn labels(State(store): State<AppState>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let csv = store.get(&id)?.lock().labels_csv()?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}

async fn health() -> Json<Health> {
    Json(Health { status: "ok" })
}

/// Routes under `/api/v1`, plus the static client bundle at `/` when configured.
pub fn router(store: AppState) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_summary))
        .route("/sessions/{id}/trials/next", get(next_trial))
        .route("/sessions/{id}/trials/{tid}/events", post(submit_events))
        .route("/sessions/{id}/trials/{tid}/entry", post(submit_entry))
        .route("/sessions/{id}/trials/{tid}/void", post(void_trial))
        .route("/sessions/{id}/finalize", post(finalize))
        .route("/sessions/{id}/export", get(export))
        .route("/sessions/{id}/labels", get(labels));
    let static_dir = store.defaults().static_dir.clone();
    let app = Router::new().nest("/api/v1", api).with_state(store).layer(TraceLayer::new_for_http());
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}
