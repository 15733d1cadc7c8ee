//! JSON HTTP API over a live session.

use std::convert::Infallible;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::{Deserialize, Serialize};
use sonify_core::engine::ActionKind;
use sonify_core::{AcquisitionMethod, AssetId, EventId};
use tokio::sync::broadcast::error::RecvError;

use crate::actor::{SessionHandle, SimulatorHandle, StreamMessage, TransferMode};
use crate::session::SessionError;

#[derive(Clone)]
pub struct ApiState {
    pub session: SessionHandle,
    pub simulator: Option<SimulatorHandle>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: error.to_owned(),
                message: message.into(),
            },
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let (status, code) = match &e {
            SessionError::UnknownEvent(_) => (StatusCode::NOT_FOUND, "unknown_event"),
            SessionError::UnknownAsset(_) => (StatusCode::NOT_FOUND, "unknown_asset"),
            SessionError::UnknownJob(_) => (StatusCode::NOT_FOUND, "unknown_job"),
            SessionError::NotACandidate { .. } => (StatusCode::CONFLICT, "not_a_candidate"),
            SessionError::InvalidRequest(_) => (StatusCode::BAD_REQUEST, "invalid_request"),
            SessionError::Closed => (StatusCode::SERVICE_UNAVAILABLE, "closed"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectRequest {
    pub asset_id: AssetId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferRequest {
    pub asset_id: AssetId,
    pub prompt: String,
    #[serde(default)]
    pub mode: TransferMode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionResponse {
    pub events: Vec<sonify_core::ArEvent>,
}

pub fn router(state: ApiState) -> Router {
    Router::new()
        .route("/session", get(get_session))
        .route("/events", get(get_events))
        .route("/events/{id}/candidates", get(get_candidates))
        .route("/events/{id}/select", post(post_select))
        .route("/events/{id}/transfer", post(post_transfer))
        .route("/events/{id}/alternatives/{method}", get(get_alternatives))
        .route("/assets/{id}/audio", get(get_audio))
        .route("/actions", post(post_action))
        .route("/stream", get(get_stream))
        .with_state(state)
}

async fn get_session(State(s): State<ApiState>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.session.view().await?))
}

async fn get_events(State(s): State<ApiState>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.session.events().await?))
}

async fn get_candidates(State(s): State<ApiState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.session.candidates(EventId(id)).await?))
}

fn json_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", e.to_string()))
}

async fn post_select(
    State(s): State<ApiState>,
    Path(id): Path<String>,
    body: axum::body::Bytes,
) -> ApiResult<impl IntoResponse> {
    let req: SelectRequest = json_body(&body)?;
    s.session.select(EventId(id), req.asset_id).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn post_transfer(
    State(s): State<ApiState>,
    Path(id): Path<String>,
    body: axum::body::Bytes,
) -> ApiResult<impl IntoResponse> {
    let req: TransferRequest = json_body(&body)?;
    let job = s
        .session
        .request_transfer(EventId(id), req.asset_id, req.prompt, req.mode)
        .await?;
    Ok((StatusCode::ACCEPTED, Json(job)))
}

fn parse_method(s: &str) -> Option<AcquisitionMethod> {
    match s {
        "recommended" => Some(AcquisitionMethod::Recommended),
        "retrieved" => Some(AcquisitionMethod::Retrieved),
        "generated" => Some(AcquisitionMethod::Generated),
        "transferred" => Some(AcquisitionMethod::Transferred),
        _ => None,
    }
}

async fn get_alternatives(
    State(s): State<ApiState>,
    Path((id, method)): Path<(String, String)>,
) -> ApiResult<impl IntoResponse> {
    let method = parse_method(&method).ok_or_else(|| {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", format!("unknown method {method:?}"))
    })?;
    Ok(Json(s.session.alternatives(EventId(id), method).await?))
}

async fn get_audio(State(s): State<ApiState>, Path(id): Path<String>) -> ApiResult<Response> {
    let id = AssetId(id);
    let clip = s
        .session
        .audio(id.clone())
        .await?
        .ok_or(SessionError::UnknownAsset(id))?;
    Ok(([(header::CONTENT_TYPE, "audio/wav")], clip.to_wav_bytes()).into_response())
}

async fn post_action(State(s): State<ApiState>, body: axum::body::Bytes) -> ApiResult<impl IntoResponse> {
    let kind: ActionKind = json_body(&body)?;
    let sim = s.simulator.as_ref().ok_or_else(|| {
        ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no_simulator", "this session has no simulator")
    })?;
    match sim.inject(kind).await {
        Ok(events) => Ok((StatusCode::ACCEPTED, Json(ActionResponse { events }))),
        Err(SessionError::InvalidRequest(m)) => Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_action", m)),
        Err(e) => Err(e.into()),
    }
}

fn sse_event(m: &StreamMessage) -> Event {
    Event::default()
        .id(m.seq.to_string())
        .event(m.body.kind())
        .data(serde_json::to_string(m).expect("stream message serializes"))
}

/// Replays the stream history, then follows live messages. A subscriber
/// that falls too far behind is disconnected and can reconnect.
async fn get_stream(State(s): State<ApiState>) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let (history, rx) = s.session.subscribe().await?;
    let past = stream::iter(history.into_iter().map(|m| Ok(sse_event(&m))));
    let live = stream::unfold(rx, |mut rx| async move {
        match rx.recv().await {
            Ok(m) => Some((Ok(sse_event(&m)), rx)),
            Err(RecvError::Lagged(n)) => {
                tracing::warn!("stream subscriber lagged by {n} messages");
                None
            }
            Err(RecvError::Closed) => None,
        }
    });
    Ok(Sse::new(past.chain(live)).keep_alive(KeepAlive::default()))
}
