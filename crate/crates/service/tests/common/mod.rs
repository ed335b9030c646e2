#![allow(dead_code)]

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use gazecode_core::log::Record;
use gazecode_core::protocol::{Code, SessionConfig, TrialSpec};
use gazecode_core::sim::{SessionRecorder, StreamTiming};
use gazecode_service::{app, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

pub fn service(dir: &std::path::Path) -> Router {
    app(ServiceConfig { data_dir: dir.to_path_buf(), ..ServiceConfig::default() }).unwrap()
}

pub async fn send(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

pub async fn send_json(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = send(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

pub async fn create(app: &Router, body: Value) -> String {
    let (status, v) = send_json(app, Method::POST, "/api/v1/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["session_id"].as_str().unwrap().to_string()
}

pub async fn next_trial(app: &Router, id: &str) -> TrialSpec {
    let (status, v) = send_json(app, Method::GET, &format!("/api/v1/sessions/{id}/trials/next"), None).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    serde_json::from_value(v).unwrap()
}

pub fn records_json(records: &[Record]) -> Value {
    json!({ "records": records.iter().map(|r| serde_json::from_str::<Value>(&r.to_line().unwrap()).unwrap()).collect::<Vec<_>>() })
}

/// Flip the first digit so the entry fails verification.
pub fn wrong(code: &Code) -> Code {
    let mut d = code.digits().to_vec();
    d[0] = (d[0] + 1) % 10;
    Code::new(d).unwrap()
}

/// A client that runs `pattern.len()` trials, entering the right code where
/// `pattern` is true, then finalizes.
pub async fn run_transcript(app: &Router, seed: u64, pattern: &[bool]) -> String {
    let id = create(app, json!({ "seed": seed, "created_utc": "2026-03-01T09:30:00.000Z" })).await;
    let mut recorder = SessionRecorder::new(&SessionConfig::default(), StreamTiming::default(), seed).unwrap();
    for &correct in pattern {
        let spec = next_trial(app, &id).await;
        let entered = if correct { spec.code.clone() } else { wrong(&spec.code) };
        let rec = recorder.record_trial(&spec, entered);
        let base = format!("/api/v1/sessions/{id}/trials/{}", spec.trial_id);
        let (status, ack) = send_json(app, Method::POST, &format!("{base}/events"), Some(records_json(&rec.events))).await;
        assert_eq!(status, StatusCode::OK, "{ack}");
        assert_eq!(ack["gate"]["passed"], json!(true));
        let body = json!({ "entered": rec.entry.entered, "ts": rec.entry.ts, "taps": rec.entry.taps });
        let (status, ack) = send_json(app, Method::POST, &format!("{base}/entry"), Some(body)).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(ack["accepted"], json!(correct));
    }
    let (status, _) = send(app, Method::POST, &format!("/api/v1/sessions/{id}/finalize"), None).await;
    assert_eq!(status, StatusCode::OK);
    id
}
