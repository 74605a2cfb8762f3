use std::collections::BTreeSet;
use std::convert::Infallible;
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use futures::{Stream, StreamExt};
use privacycube_core::registry::RegistryListing;
use privacycube_core::taxonomy::DataCategory;
use privacycube_core::{parse_profile, CollectionEvent, CubeState, DeviceId, EngineError, EventKind, StateDelta};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast::error::RecvError;
use tokio::sync::broadcast::Receiver;

use crate::event_log::Mutation;
use crate::hub::{Ack, CommitError, Hub};

#[derive(Clone)]
struct AppState {
    hub: Arc<Hub>,
    keep_alive: Duration,
}

pub fn router(hub: Arc<Hub>, keep_alive: Duration) -> Router {
    Router::new()
        .route("/api/devices", get(list_devices).post(register_device))
        .route("/api/devices/{id}", delete(unregister_device))
        .route("/api/events", post(post_event))
        .route("/api/focus", post(post_focus))
        .route("/api/state", get(get_state))
        .route("/api/stream", get(stream))
        .with_state(AppState { hub, keep_alive })
}

pub(crate) fn wall_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Error body: `{"error": <code>, "message": <text>}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(code: &'static str, message: impl ToString) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code,
            message: message.to_string(),
        }
    }
}

impl From<CommitError> for ApiError {
    fn from(err: CommitError) -> Self {
        match err {
            CommitError::Rejected(e) => ApiError::bad_request(e.code(), &e),
            CommitError::Log(_) | CommitError::LogUnavailable => ApiError {
                status: StatusCode::INTERNAL_SERVER_ERROR,
                code: "event_log_unavailable",
                message: err.to_string(),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.code.to_owned(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

// Bodies are decoded by hand so every rejection is a 400 with our error shape.
fn decode<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("malformed_request", e))
}

/// Ids that fail the id rules cannot be registered, so they are unknown.
fn known_id(id: String) -> Result<DeviceId, ApiError> {
    DeviceId::new(id.as_str()).map_err(|_| {
        let err = EngineError::UnknownDevice(id);
        ApiError::bad_request(err.code(), err)
    })
}

async fn list_devices(State(app): State<AppState>) -> Json<Vec<RegistryListing>> {
    Json(
        app.hub
            .read(|engine| engine.registry().entries().iter().map(RegistryListing::from).collect())
            .await,
    )
}

#[derive(Serialize)]
struct Registered {
    #[serde(flatten)]
    ack: Ack,
    device: RegistryListing,
}

async fn register_device(State(app): State<AppState>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let profile = parse_profile(&body).map_err(|e| ApiError::bad_request(e.code(), &e))?;
    let id = profile.device_id().clone();
    let at_ms = wall_ms();
    let (ack, device) = app
        .hub
        .commit(at_ms, Mutation::Register { at_ms, profile }, |engine| {
            RegistryListing::from(engine.registry().get(id.as_str()).expect("just registered"))
        })
        .await?;
    Ok((StatusCode::CREATED, Json(Registered { ack, device })))
}

async fn unregister_device(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<Ack>, ApiError> {
    let not_found = || ApiError {
        status: StatusCode::NOT_FOUND,
        code: "unknown_device",
        message: format!("device `{id}` is not registered"),
    };
    let device_id = DeviceId::new(id.as_str()).map_err(|_| not_found())?;
    let at_ms = wall_ms();
    let mutation = Mutation::Unregister { at_ms, device_id };
    match app.hub.commit(at_ms, mutation, |_| ()).await {
        Ok((ack, ())) => Ok(Json(ack)),
        Err(CommitError::Rejected(EngineError::UnknownDevice(_))) => Err(not_found()),
        Err(e) => Err(e.into()),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EventBody {
    #[serde(rename = "type")]
    kind: EventKind,
    device_id: String,
    #[serde(default)]
    timestamp_ms: Option<u64>,
    #[serde(default)]
    categories: Option<BTreeSet<DataCategory>>,
}

async fn post_event(State(app): State<AppState>, body: Bytes) -> Result<Json<Ack>, ApiError> {
    let body: EventBody = decode(&body)?;
    let wall = wall_ms();
    let event = CollectionEvent {
        kind: body.kind,
        device_id: known_id(body.device_id)?,
        timestamp_ms: body.timestamp_ms.unwrap_or(wall),
        categories: body.categories,
    };
    let (ack, ()) = app.hub.commit(wall, Mutation::Event { event }, |_| ()).await?;
    Ok(Json(ack))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FocusBody {
    device_id: Option<String>,
    #[serde(default)]
    timestamp_ms: Option<u64>,
}

async fn post_focus(State(app): State<AppState>, body: Bytes) -> Result<Json<Ack>, ApiError> {
    let body: FocusBody = decode(&body)?;
    let wall = wall_ms();
    let device_id = body.device_id.map(known_id).transpose()?;
    let mutation = Mutation::Focus {
        at_ms: body.timestamp_ms.unwrap_or(wall),
        device_id,
    };
    let (ack, ()) = app.hub.commit(wall, mutation, |_| ()).await?;
    Ok(Json(ack))
}

async fn get_state(State(app): State<AppState>) -> Json<CubeState> {
    Json(app.hub.state().await)
}

/// What a stream subscriber is sent, before SSE framing.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum StreamMessage {
    Snapshot(CubeState),
    Delta(Arc<StateDelta>),
}

impl StreamMessage {
    fn into_event(self) -> Event {
        match self {
            StreamMessage::Snapshot(state) => Event::default().event("snapshot").data(state.to_json()),
            StreamMessage::Delta(delta) => Event::default()
                .event("delta")
                .data(serde_json::to_string(&*delta).expect("deltas always serialize")),
        }
    }
}

pub(crate) struct Subscription {
    hub: Arc<Hub>,
    rx: Receiver<Arc<StateDelta>>,
    pending: Option<CubeState>,
    version: u64,
}

impl Subscription {
    pub(crate) async fn new(hub: Arc<Hub>) -> Subscription {
        let (snapshot, rx) = hub.subscribe().await;
        Subscription {
            hub,
            rx,
            version: snapshot.version,
            pending: Some(snapshot),
        }
    }

    /// Snapshot first, then one delta per committed mutation. A subscriber
    /// that falls behind the broadcast buffer gets a fresh snapshot instead.
    pub(crate) fn into_stream(self) -> impl Stream<Item = StreamMessage> {
        futures::stream::unfold(self, |mut sub| async move {
            if let Some(first) = sub.pending.take() {
                return Some((StreamMessage::Snapshot(first), sub));
            }
            loop {
                match sub.rx.recv().await {
                    Ok(delta) if delta.version <= sub.version => continue,
                    Ok(delta) => {
                        sub.version = delta.version;
                        return Some((StreamMessage::Delta(delta), sub));
                    }
                    Err(RecvError::Lagged(skipped)) => {
                        tracing::debug!(skipped, "stream subscriber lagged; re-sending snapshot");
                        let (state, rx) = sub.hub.subscribe().await;
                        sub.rx = rx;
                        sub.version = state.version;
                        return Some((StreamMessage::Snapshot(state), sub));
                    }
                    Err(RecvError::Closed) => return None,
                }
            }
        })
    }
}

async fn stream(State(app): State<AppState>) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let mut closing = app.hub.closing();
    let events = Subscription::new(app.hub.clone())
        .await
        .into_stream()
        .map(|message| Ok(message.into_event()))
        .take_until(async move {
            let _ = closing.wait_for(|closed| *closed).await;
        });
    Sse::new(events).keep_alive(KeepAlive::new().interval(app.keep_alive).text("keep-alive"))
}
