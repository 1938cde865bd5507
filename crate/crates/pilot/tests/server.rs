use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use gesture_pilot::frame::{decode_wire_frame, encode_wire_frame};
use gesture_pilot::scene::{render_at, ArmPose, SceneSpec};
use gesture_pilot::sim::DroneState;
use gesture_pilot::{BoundingBox, Frame, Models, PipelineConfig};
use pilot::server::{serve, AppState, CLOSE_PROTOCOL_ERROR};
use serde_json::Value;
use tokio::net::TcpListener;
use tokio_tungstenite::tungstenite::Message;

type Socket = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

const USER_BOX: BoundingBox = BoundingBox { x: 260, y: 90, width: 120, height: 300 };

async fn start(config: PipelineConfig) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let state = AppState::new(config, Models::bundled());
    tokio::spawn(async move { serve(listener, state).await.unwrap() });
    format!("127.0.0.1:{}", addr.port())
}

async fn connect(addr: &str) -> Socket {
    tokio_tungstenite::connect_async(format!("ws://{addr}/pilot")).await.unwrap().0
}

async fn get_json(addr: &str, path: &str) -> Value {
    reqwest::get(format!("http://{addr}{path}")).await.unwrap().json().await.unwrap()
}

async fn post(addr: &str, path: &str, body: Option<Value>) -> reqwest::Response {
    let client = reqwest::Client::new();
    let req = client.post(format!("http://{addr}{path}"));
    let req = match body {
        Some(b) => req.json(&b),
        None => req,
    };
    req.send().await.unwrap()
}

fn gesture_frame(i: u32, pose: ArmPose) -> Frame {
    let spec = SceneSpec { arm_which: pose, arm_angle: 0.2, noise_seed: Some(u64::from(i)), ..SceneSpec::default() };
    let drone = DroneState::facing([0.0, 0.0, 0.875], [0.0, 3.5, 0.875]);
    render_at(&spec, &drone, i * 40).unwrap().0
}

async fn next(ws: &mut Socket) -> Message {
    tokio::time::timeout(Duration::from_secs(30), ws.next())
        .await
        .expect("server reply in time")
        .expect("socket open")
        .expect("valid message")
}

/// Report and annotated frame for one sent frame.
async fn exchange(ws: &mut Socket, frame: &Frame) -> (Value, Frame) {
    ws.send(Message::Binary(encode_wire_frame(frame).into())).await.unwrap();
    read_pair(ws).await
}

async fn read_pair(ws: &mut Socket) -> (Value, Frame) {
    let report = match next(ws).await {
        Message::Text(t) => serde_json::from_str::<Value>(&t).unwrap(),
        other => panic!("expected a report, got {other:?}"),
    };
    assert_eq!(report["type"], "report", "{report}");
    let annotated = match next(ws).await {
        Message::Binary(b) => decode_wire_frame(&b, u64::MAX).unwrap(),
        other => panic!("expected an annotated frame, got {other:?}"),
    };
    (report, annotated)
}

#[tokio::test]
async fn health_before_first_frame() {
    let addr = start(PipelineConfig::default()).await;
    let health = get_json(&addr, "/health").await;
    assert_eq!(health["state"], "awaiting_init");
    assert_eq!(health["frames"], 0);
}

#[tokio::test]
async fn config_echoes_defaults() {
    let addr = start(PipelineConfig::default()).await;
    let value = get_json(&addr, "/config").await;
    let echoed: PipelineConfig = serde_json::from_value(value.clone()).unwrap();
    assert_eq!(echoed, PipelineConfig::default());
    assert_eq!(value["hand"]["lambda1"], 0.5);
    assert_eq!(value["hand"]["lambda2"], 0.2);
    assert_eq!(value["hand"]["lambda3"], 0.013);
    assert_eq!(value["command"]["lambda4"], 0.5);
    assert_eq!(value["command"]["buffer_len"], 60);
    assert_eq!(value["command"]["min_votes"], 30);
    assert_eq!(value["command"]["min_interval_ms"], 600);
}

#[tokio::test]
async fn init_box_is_validated_and_echoed() {
    let addr = start(PipelineConfig::default()).await;
    let bad = post(&addr, "/init-box", Some(serde_json::json!([1, 2, 0, 5]))).await;
    assert_eq!(bad.status(), 400);
    let garbage = post(&addr, "/init-box", Some(serde_json::json!({"left": 3}))).await;
    assert!(garbage.status().is_client_error());

    let ok = post(&addr, "/init-box", Some(serde_json::json!({"x": 260, "y": 90, "width": 120, "height": 300}))).await;
    assert_eq!(ok.status(), 200);
    let config = get_json(&addr, "/config").await;
    assert_eq!(config["init_box"], serde_json::json!([260, 90, 120, 300]));
}

#[tokio::test]
async fn one_frame_one_pair() {
    let addr = start(PipelineConfig::default()).await;
    let mut ws = connect(&addr).await;
    let frame = gesture_frame(0, ArmPose::Rest);
    let (report, annotated) = exchange(&mut ws, &frame).await;
    assert_eq!(report["frame"], 0);
    assert_eq!(report["timestamp_ms"], 0);
    assert_eq!(report["state"], "tracking", "the bundled cascade finds the rendered face");
    assert_eq!((annotated.width(), annotated.height()), (640, 480));
    assert_eq!(annotated.timestamp_ms(), 0);
    assert_ne!(annotated.pixels(), frame.pixels(), "the user box is drawn");

    let extra = tokio::time::timeout(Duration::from_millis(300), ws.next()).await;
    assert!(extra.is_err(), "nothing beyond the pair: {extra:?}");
    assert_eq!(get_json(&addr, "/health").await["state"], "tracking");
}

#[tokio::test]
async fn malformed_frame_keeps_connection() {
    let addr = start(PipelineConfig::default()).await;
    let mut ws = connect(&addr).await;
    let mut bytes = encode_wire_frame(&Frame::filled(4, 4, [9; 3], 0).unwrap());
    bytes[0] = b'X';
    ws.send(Message::Binary(bytes.into())).await.unwrap();
    match next(&mut ws).await {
        Message::Text(t) => {
            let v: Value = serde_json::from_str(&t).unwrap();
            assert_eq!(v["type"], "error");
            assert!(v["message"].as_str().unwrap().contains("protocol"), "{v}");
        }
        other => panic!("expected an error message, got {other:?}"),
    }

    let truncated = encode_wire_frame(&Frame::filled(4, 4, [9; 3], 0).unwrap());
    ws.send(Message::Binary(truncated[..20].to_vec().into())).await.unwrap();
    assert!(matches!(next(&mut ws).await, Message::Text(t) if t.contains("truncated")));

    let (report, _) = exchange(&mut ws, &gesture_frame(1, ArmPose::Rest)).await;
    assert_eq!(report["frame"], 0, "rejected frames never reach the pipeline");
}

#[tokio::test]
async fn oversized_frame_closes_with_protocol_error() {
    let mut config = PipelineConfig::default();
    config.io.max_pixels = 100 * 100;
    let addr = start(config).await;
    let mut ws = connect(&addr).await;
    let big = Frame::filled(200, 100, [0; 3], 0).unwrap();
    ws.send(Message::Binary(encode_wire_frame(&big).into())).await.unwrap();
    match next(&mut ws).await {
        Message::Close(Some(frame)) => assert_eq!(u16::from(frame.code), CLOSE_PROTOCOL_ERROR),
        other => panic!("expected a close frame, got {other:?}"),
    }
}

#[tokio::test]
async fn reset_restores_drone_and_buffers() {
    let config = PipelineConfig { init_box: Some(USER_BOX), ..PipelineConfig::default() };
    let start_pos = config.world.drone_start;
    let addr = start(config).await;
    let mut ws = connect(&addr).await;

    let mut moved = false;
    for i in 0..45 {
        let (report, _) = exchange(&mut ws, &gesture_frame(i, ArmPose::Right)).await;
        let pos: [f64; 3] = serde_json::from_value(report["drone"]["position"].clone()).unwrap();
        moved |= pos != start_pos;
    }
    assert!(moved, "a held stretched arm moves the drone");

    assert_eq!(post(&addr, "/reset", None).await.status(), 200);
    let (report, _) = exchange(&mut ws, &gesture_frame(45, ArmPose::Right)).await;
    let pos: [f64; 3] = serde_json::from_value(report["drone"]["position"].clone()).unwrap();
    assert_eq!(pos, start_pos);
    let votes: [usize; 2] = serde_json::from_value(report["votes"].clone()).unwrap();
    assert!(votes[0] <= 1 && votes[1] == 0, "buffers restart empty: {votes:?}");
    assert!(report["command"].is_null());
}

#[tokio::test]
async fn fast_client_gets_drop_oldest() {
    let config = PipelineConfig { init_box: Some(USER_BOX), ..PipelineConfig::default() };
    let addr = start(config).await;
    let mut ws = connect(&addr).await;
    let frames: Vec<Frame> = (0..20).map(|i| gesture_frame(i, ArmPose::Left)).collect();
    for f in &frames {
        ws.send(Message::Binary(encode_wire_frame(f).into())).await.unwrap();
    }
    let last_ts = frames.last().unwrap().timestamp_ms();
    let mut seen = Vec::new();
    loop {
        let (report, annotated) = read_pair(&mut ws).await;
        let ts = report["timestamp_ms"].as_u64().unwrap() as u32;
        assert_eq!(annotated.timestamp_ms(), ts, "pairs stay together");
        seen.push(ts);
        if ts == last_ts {
            break;
        }
    }
    assert!(seen.windows(2).all(|w| w[0] < w[1]), "in order: {seen:?}");
    assert!(seen.iter().all(|t| frames.iter().any(|f| f.timestamp_ms() == *t)), "no phantom reports");
    let health = get_json(&addr, "/health").await;
    let processed = health["frames"].as_u64().unwrap();
    let dropped = health["dropped"].as_u64().unwrap();
    assert_eq!(processed as usize, seen.len());
    assert_eq!(processed + dropped, 20, "every frame is either processed or dropped");
}

#[tokio::test]
async fn sessions_are_independent() {
    let config = PipelineConfig { init_box: Some(USER_BOX), ..PipelineConfig::default() };
    let addr = start(config).await;
    let mut a = connect(&addr).await;
    let mut b = connect(&addr).await;
    for i in 0..3 {
        exchange(&mut a, &gesture_frame(i, ArmPose::Rest)).await;
    }
    let (report, _) = exchange(&mut b, &gesture_frame(0, ArmPose::Rest)).await;
    assert_eq!(report["frame"], 0);
    assert_eq!(get_json(&addr, "/health").await["sessions"], 2);
}
