//! Live service: HTTP control endpoints and the `/pilot` WebSocket, where
//! each connection gets its own pipeline and simulated drone.
//!
//! Clients send binary wire frames. For every processed frame the server
//! replies with a JSON text message `{"type":"report", ...FrameReport}`
//! followed by the annotated frame as a binary wire frame. Problems are
//! reported as `{"type":"error","message":...}`.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use gesture_pilot::annotate::annotate;
use gesture_pilot::frame::{decode_wire_frame, encode_wire_frame, WIRE_HEADER_LEN};
use gesture_pilot::pipeline::PipelineState;
use gesture_pilot::{BoundingBox, Error, Frame, FrameReport, Models, Pipeline, PipelineConfig};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, Notify};

/// Close code sent when a client breaks the frame protocol.
pub const CLOSE_PROTOCOL_ERROR: u16 = 1002;
/// Frames waiting for the processing loop; older ones are dropped first.
pub const QUEUE_DEPTH: usize = 2;

#[derive(Debug, Clone, Copy)]
enum Control {
    InitBox(BoundingBox),
    Reset,
}

#[derive(Debug, Clone, Serialize)]
pub struct Health {
    pub state: PipelineState,
    pub sessions: usize,
    pub frames: u64,
    pub dropped: u64,
}

pub struct AppState {
    config: Mutex<PipelineConfig>,
    models: Models,
    control: broadcast::Sender<Control>,
    health: Mutex<Health>,
}

impl AppState {
    pub fn new(config: PipelineConfig, models: Models) -> Arc<AppState> {
        Arc::new(AppState {
            config: Mutex::new(config),
            models,
            control: broadcast::channel(16).0,
            health: Mutex::new(Health { state: PipelineState::AwaitingInit, sessions: 0, frames: 0, dropped: 0 }),
        })
    }

    fn config(&self) -> PipelineConfig {
        self.config.lock().expect("config lock").clone()
    }

    fn update_health(&self, f: impl FnOnce(&mut Health)) {
        f(&mut self.health.lock().expect("health lock"));
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/config", get(config))
        .route("/init-box", post(init_box))
        .route("/reset", post(reset))
        .route("/pilot", get(pilot))
        .with_state(state)
}

pub async fn serve(listener: TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(state.health.lock().expect("health lock").clone())
}

async fn config(State(state): State<Arc<AppState>>) -> Json<PipelineConfig> {
    Json(state.config())
}

/// `[x, y, w, h]` or `{"x":..,"y":..,"width":..,"height":..}`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum BoxBody {
    Array(BoundingBox),
    Fields { x: i32, y: i32, width: i32, height: i32 },
}

fn error_response(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

async fn init_box(State(state): State<Arc<AppState>>, body: Option<Json<BoxBody>>) -> Response {
    let Some(Json(body)) = body else {
        return error_response(StatusCode::BAD_REQUEST, "expected [x, y, w, h] or {x, y, width, height}");
    };
    let b = match body {
        BoxBody::Array(b) => b,
        BoxBody::Fields { x, y, width, height } => BoundingBox::new(x, y, width, height),
    };
    if b.is_empty() {
        return error_response(StatusCode::BAD_REQUEST, "init box must have positive size");
    }
    state.config.lock().expect("config lock").init_box = Some(b);
    let sessions = state.control.send(Control::InitBox(b)).unwrap_or(0);
    Json(json!({ "init_box": b, "sessions": sessions })).into_response()
}

async fn reset(State(state): State<Arc<AppState>>) -> Response {
    let sessions = state.control.send(Control::Reset).unwrap_or(0);
    Json(json!({ "reset": true, "sessions": sessions })).into_response()
}

async fn pilot(ws: WebSocketUpgrade, State(state): State<Arc<AppState>>) -> Response {
    let max_pixels = state.config().io.max_pixels;
    // one byte over the largest legal frame still reaches our own check
    let limit = WIRE_HEADER_LEN + 3 * max_pixels as usize + 1;
    ws.max_message_size(limit).max_frame_size(limit).on_upgrade(move |socket| session(socket, state))
}

/// Bounded hand-off between the socket reader and the processing loop.
#[derive(Debug, Default)]
pub struct FrameQueue {
    frames: VecDeque<Frame>,
    depth: usize,
    closed: bool,
}

impl FrameQueue {
    pub fn new(depth: usize) -> FrameQueue {
        FrameQueue { frames: VecDeque::with_capacity(depth), depth: depth.max(1), closed: false }
    }

    /// Queue a frame, returning the oldest one if it had to make room.
    pub fn push(&mut self, frame: Frame) -> Option<Frame> {
        let dropped = if self.frames.len() >= self.depth { self.frames.pop_front() } else { None };
        self.frames.push_back(frame);
        dropped
    }

    pub fn pop(&mut self) -> Option<Frame> {
        self.frames.pop_front()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn close(&mut self) {
        self.closed = true;
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }
}

enum Outgoing {
    Error(String),
    Pair(String, Vec<u8>),
    Close(u16, String),
}

fn error_text(message: &str) -> String {
    json!({ "type": "error", "message": message }).to_string()
}

fn report_text(report: &FrameReport) -> String {
    let mut value = serde_json::to_value(report).expect("reports serialise");
    value.as_object_mut().expect("report is an object").insert("type".into(), "report".into());
    value.to_string()
}

async fn session(socket: WebSocket, state: Arc<AppState>) {
    state.update_health(|h| h.sessions += 1);
    let (mut sink, mut stream) = socket.split();
    let (out_tx, mut out_rx) = mpsc::channel::<Outgoing>(8);

    let writer = tokio::spawn(async move {
        while let Some(msg) = out_rx.recv().await {
            let sent = match msg {
                Outgoing::Error(text) => sink.send(Message::Text(error_text(&text).into())).await,
                Outgoing::Pair(report, frame) => match sink.send(Message::Text(report.into())).await {
                    Ok(()) => sink.send(Message::Binary(frame.into())).await,
                    Err(e) => Err(e),
                },
                Outgoing::Close(code, reason) => {
                    let frame = CloseFrame { code, reason: reason.into() };
                    let _ = sink.send(Message::Close(Some(frame))).await;
                    break;
                }
            };
            if sent.is_err() {
                break;
            }
        }
    });

    let queue = Arc::new((Mutex::new(FrameQueue::new(QUEUE_DEPTH)), Notify::new()));
    let processor = {
        let queue = Arc::clone(&queue);
        let state = Arc::clone(&state);
        let out_tx = out_tx.clone();
        tokio::spawn(async move { process_loop(queue, state, out_tx).await })
    };

    let max_pixels = state.config().io.max_pixels;
    while let Some(msg) = stream.next().await {
        let msg = match msg {
            Ok(m) => m,
            Err(e) => {
                log::warn!("websocket receive failed: {e}");
                let _ =
                    out_tx.send(Outgoing::Close(CLOSE_PROTOCOL_ERROR, "message too large or malformed".into())).await;
                break;
            }
        };
        match msg {
            Message::Binary(bytes) => match decode_wire_frame(&bytes, max_pixels) {
                Ok(frame) => {
                    let dropped = queue.0.lock().expect("queue lock").push(frame);
                    if let Some(old) = dropped {
                        log::debug!("dropping frame at {} ms", old.timestamp_ms());
                        state.update_health(|h| h.dropped += 1);
                    }
                    queue.1.notify_one();
                }
                Err(e @ Error::Resource(_)) => {
                    let _ = out_tx.send(Outgoing::Close(CLOSE_PROTOCOL_ERROR, e.to_string())).await;
                    break;
                }
                Err(e) => {
                    let _ = out_tx.send(Outgoing::Error(e.to_string())).await;
                }
            },
            Message::Text(_) => {
                let _ = out_tx.send(Outgoing::Error("expected a binary wire frame".into())).await;
            }
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => {}
        }
    }

    queue.0.lock().expect("queue lock").close();
    queue.1.notify_one();
    let _ = processor.await;
    drop(out_tx);
    let _ = writer.await;
    state.update_health(|h| h.sessions -= 1);
}

async fn process_loop(queue: Arc<(Mutex<FrameQueue>, Notify)>, state: Arc<AppState>, out: mpsc::Sender<Outgoing>) {
    let mut control = state.control.subscribe();
    let mut pipeline = match Pipeline::new(state.config(), state.models.clone()) {
        Ok(p) => p,
        Err(e) => {
            let _ = out.send(Outgoing::Close(1011, e.to_string())).await;
            return;
        }
    };
    loop {
        let next = {
            let mut q = queue.0.lock().expect("queue lock");
            match q.pop() {
                Some(f) => Some(f),
                None if q.is_closed() => return,
                None => None,
            }
        };
        let Some(frame) = next else {
            queue.1.notified().await;
            continue;
        };

        loop {
            match control.try_recv() {
                Ok(Control::Reset) => pipeline.reset(),
                Ok(Control::InitBox(b)) => {
                    let _ = pipeline.set_init_box(b);
                }
                Err(broadcast::error::TryRecvError::Lagged(_)) => {}
                Err(_) => break,
            }
        }

        let (returned, result) = tokio::task::spawn_blocking(move || {
            let result = pipeline.process(&frame).map(|report| {
                let annotated = annotate(&frame, &report);
                (report, encode_wire_frame(&annotated))
            });
            (pipeline, result)
        })
        .await
        .expect("pipeline task panicked");
        pipeline = returned;

        let msg = match result {
            Ok((report, bytes)) => {
                state.update_health(|h| {
                    h.state = report.state;
                    h.frames += 1;
                });
                Outgoing::Pair(report_text(&report), bytes)
            }
            Err(e) => Outgoing::Error(e.to_string()),
        };
        if out.send(msg).await.is_err() {
            return;
        }
    }
}
