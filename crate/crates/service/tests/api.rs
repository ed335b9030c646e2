mod common;

use axum::http::{Method, StatusCode};
use common::*;
use gazecode_core::log::{extract_labels, parse_session, validate_session, FrameRecord, ImuSample, Record, Sensor, TargetEvent, TimestampNs, LABEL_CSV_HEADER};
use gazecode_core::protocol::{OrientationMode, OrientationReading};
use gazecode_core::log::OrientRecord;
use serde_json::json;

fn orient(ts: u64, mode: OrientationReading) -> Record {
    Record::Orient(OrientRecord { ts: TimestampNs(ts), mode })
}

#[tokio::test]
async fn create_validates_and_allocates_ids() {
    let dir = tempfile::tempdir().unwrap();
    let app = service(dir.path());
    let (status, v) = send_json(&app, Method::POST, "/api/v1/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["config"]["code_length"], json!(4));
    let a = v["session_id"].as_str().unwrap().to_string();
    let b = create(&app, json!({})).await;
    assert_ne!(a, b);
    assert!(dir.path().join(&b).join("session.log").is_file());
    assert!(dir.path().join(&b).join("meta.json").is_file());

    let bad = json!({ "geometry": { "w_px": 1080, "h_px": 1920, "dpi": 0.0, "cam_x_in": 1.25, "cam_y_in": -0.2 } });
    let (status, v) = send_json(&app, Method::POST, "/api/v1/sessions", Some(bad)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{v}");
    let (status, _) = send(&app, Method::POST, "/api/v1/sessions", Some(json!({ "config": { "colour": 1 } }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = send(&app, Method::POST, "/api/v1/sessions", Some(json!({ "config": { "code_length": 0 } }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let id = create(&app, json!({ "config": { "code_length": 6 }, "seed": 3 })).await;
    assert_eq!(next_trial(&app, &id).await.code.len(), 6);
}

#[tokio::test]
async fn trials_are_strictly_sequential() {
    let dir = tempfile::tempdir().unwrap();
    let app = service(dir.path());
    let (status, _) = send(&app, Method::GET, "/api/v1/sessions/s-999999/trials/next", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let id = create(&app, json!({ "seed": 1 })).await;
    let t0 = next_trial(&app, &id).await;
    assert_eq!(t0.trial_id, 0);
    assert_eq!(t0.code.len(), 4);
    assert!(OrientationMode::ALL.contains(&t0.required_orientation));
    let (status, _) = send(&app, Method::GET, &format!("/api/v1/sessions/{id}/trials/next"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let entry = json!({ "entered": t0.code.to_string(), "ts": 10 });
    let (status, v) = send_json(&app, Method::POST, &format!("/api/v1/sessions/{id}/trials/0/entry"), Some(entry.clone())).await;
    assert_eq!((status, v["accepted"].clone()), (StatusCode::OK, json!(true)));
    let (status, _) = send(&app, Method::POST, &format!("/api/v1/sessions/{id}/trials/0/entry"), Some(entry)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(next_trial(&app, &id).await.trial_id, 1);

    let (status, _) = send(&app, Method::POST, &format!("/api/v1/sessions/{id}/trials/7/entry"), Some(json!({ "entered": [1,2,3,4], "ts": 20 }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn entries_verify_and_keep_the_first_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let app = service(dir.path());
    let id = create(&app, json!({ "seed": 2 })).await;
    let t0 = next_trial(&app, &id).await;
    let uri = format!("/api/v1/sessions/{id}/trials/0/entry");
    let (status, v) = send_json(&app, Method::POST, &uri, Some(json!({ "entered": wrong(&t0.code), "ts": 5 }))).await;
    assert_eq!((status, v["accepted"].clone()), (StatusCode::OK, json!(false)));
    let (status, _) = send(&app, Method::POST, &uri, Some(json!({ "entered": t0.code, "ts": 6 }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (_, summary) = send_json(&app, Method::GET, &format!("/api/v1/sessions/{id}"), None).await;
    assert_eq!(summary["trials"][0]["accepted"], json!(false));
    assert_eq!(summary["rejected"], json!(1));

    let t1 = next_trial(&app, &id).await;
    let uri = format!("/api/v1/sessions/{id}/trials/{}/entry", t1.trial_id);
    let (status, _) = send(&app, Method::POST, &uri, Some(json!({ "entered": "47a1", "ts": 7 }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = send(&app, Method::POST, &uri, Some(json!({ "entered": [1, 12], "ts": 7 }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = send(&app, Method::POST, &uri, Some(json!({ "entered": "1234", "ts": 1 }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "entry timestamps are monotone too");
}

#[tokio::test]
async fn event_batches() {
    let dir = tempfile::tempdir().unwrap();
    let app = service(dir.path());
    let id = create(&app, json!({ "seed": 4 })).await;
    let t0 = next_trial(&app, &id).await;
    let uri = format!("/api/v1/sessions/{id}/trials/0/events");

    let (status, ack) = send_json(&app, Method::POST, &uri, Some(json!({ "records": [] }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ack["counts"], json!({}));
    assert_eq!(ack["status"], json!("issued"));

    let target = Record::Target(TargetEvent {
        trial: 0, idx: 0, digit: t0.code.digits()[0], u: 0.5, v: 0.5, opacity: 0.1,
        ts_appear: TimestampNs(100), ts_disappear: TimestampNs(400),
    });
    let imu = |ts| Record::Imu(ImuSample { ts: TimestampNs(ts), sensor: Sensor::Accel, x: 0.0, y: -9.8, z: 0.1 });
    let frame = |ts, idx| Record::Frame(FrameRecord { ts: TimestampNs(ts), idx, media: None });
    let batch = vec![imu(50), target.clone(), frame(60, 0), imu(70), frame(120, 1)];
    let (status, ack) = send_json(&app, Method::POST, &uri, Some(records_json(&batch))).await;
    assert_eq!(status, StatusCode::OK, "{ack}");
    assert_eq!(ack["counts"], json!({ "frame": 2, "imu": 2, "target": 1 }));
    assert_eq!(ack["status"], json!("events_received"));

    let regress = vec![imu(80), imu(90), imu(85)];
    let (status, err) = send_json(&app, Method::POST, &uri, Some(records_json(&regress))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["index"], json!(2));
    let (status, err) = send_json(&app, Method::POST, &uri, Some(records_json(&[frame(10, 5)]))).await;
    assert_eq!((status, err["index"].clone()), (StatusCode::UNPROCESSABLE_ENTITY, json!(0)));

    let mut foreign = target.clone();
    if let Record::Target(t) = &mut foreign {
        t.trial = 3;
        t.ts_appear = TimestampNs(500);
    }
    let (status, err) = send_json(&app, Method::POST, &uri, Some(records_json(&[imu(95), foreign]))).await;
    assert_eq!((status, err["index"].clone()), (StatusCode::UNPROCESSABLE_ENTITY, json!(1)));
    let (status, _) = send(&app, Method::POST, &uri, Some(json!({ "records": [{ "t": "entry", "trial": 0, "entered": [1], "ts": 1, "accepted": true }] }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, err) = send_json(&app, Method::POST, &uri, Some(json!({ "records": [{ "t": "imu", "ts": "late" }] }))).await;
    assert_eq!((status, err["index"].clone()), (StatusCode::UNPROCESSABLE_ENTITY, json!(0)));
    let (status, _) = send(&app, Method::POST, &format!("/api/v1/sessions/{id}/trials/9/events"), Some(json!({ "records": [] }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (status, ack) = send_json(&app, Method::POST, &uri, Some(json!({ "records": [{ "t": "gaze_hint", "x": 1 }] }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ack["counts"], json!({ "gaze_hint": 1 }));
}

#[tokio::test]
async fn gate_tracking_and_void_policy() {
    let dir = tempfile::tempdir().unwrap();
    let app = service(dir.path());
    for (policy, expect_status) in [("warn", "events_received"), ("void", "voided")] {
        let id = create(&app, json!({ "seed": 5, "gate_policy": policy })).await;
        let t0 = next_trial(&app, &id).await;
        let required: OrientationReading = t0.required_orientation.into();
        let other = if required == OrientationReading::Portrait { OrientationReading::Landscape } else { OrientationReading::Portrait };
        let uri = format!("/api/v1/sessions/{id}/trials/0/events");

        let held: Vec<Record> = (0..9).map(|i| orient(i, required)).collect();
        let (_, ack) = send_json(&app, Method::POST, &uri, Some(records_json(&held))).await;
        assert_eq!(ack["gate"]["passed"], json!(false));
        let (_, ack) = send_json(&app, Method::POST, &uri, Some(records_json(&[orient(9, required)]))).await;
        assert_eq!(ack["gate"], json!({ "passed": true, "holding": true, "lost_after_pass": false }));

        let lost: Vec<Record> = (10..20).map(|i| orient(i, other)).collect();
        let (_, ack) = send_json(&app, Method::POST, &uri, Some(records_json(&lost))).await;
        assert_eq!(ack["gate"]["lost_after_pass"], json!(true));
        assert_eq!(ack["status"], json!(expect_status));
    }
}

#[tokio::test]
async fn void_finalize_export_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let app = service(dir.path());
    let id = create(&app, json!({ "seed": 6 })).await;
    let (status, _) = send(&app, Method::GET, &format!("/api/v1/sessions/{id}/export"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    next_trial(&app, &id).await;
    let (status, _) = send(&app, Method::POST, &format!("/api/v1/sessions/{id}/finalize"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, v) = send_json(&app, Method::POST, &format!("/api/v1/sessions/{id}/trials/0/void"), Some(json!({ "reason": "walked away" }))).await;
    assert_eq!((status, v["status"].clone()), (StatusCode::OK, json!("voided")));
    let (status, _) = send(&app, Method::POST, &format!("/api/v1/sessions/{id}/trials/0/void"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let t1 = next_trial(&app, &id).await;
    send(&app, Method::POST, &format!("/api/v1/sessions/{id}/trials/1/entry"), Some(json!({ "entered": wrong(&t1.code), "ts": 1 }))).await;
    let (status, summary) = send_json(&app, Method::POST, &format!("/api/v1/sessions/{id}/finalize"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!((summary["voided"].clone(), summary["rejected"].clone()), (json!(1), json!(1)));
    let (status, again) = send_json(&app, Method::POST, &format!("/api/v1/sessions/{id}/finalize"), None).await;
    assert_eq!((status, again), (StatusCode::OK, summary));
    let (status, _) = send(&app, Method::GET, &format!("/api/v1/sessions/{id}/trials/next"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let (status, bytes) = send(&app, Method::GET, &format!("/api/v1/sessions/{id}/export"), None).await;
    assert_eq!(status, StatusCode::OK);
    let log = parse_session(&bytes).unwrap();
    assert_eq!(log.voids().count(), 1);
    let (status, csv) = send(&app, Method::GET, &format!("/api/v1/sessions/{id}/labels"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(String::from_utf8(csv).unwrap(), format!("{LABEL_CSV_HEADER}\n"));
}

#[tokio::test]
async fn transcript_exports_clean_log_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    let app = service(dir.path());
    let pattern = [true, false, true, true, false, true];
    let id = run_transcript(&app, 77, &pattern).await;
    let (_, bytes) = send(&app, Method::GET, &format!("/api/v1/sessions/{id}/export"), None).await;
    assert_eq!(bytes, std::fs::read(dir.path().join(&id).join("session.log")).unwrap());
    let log = parse_session(&bytes).unwrap();
    let report = validate_session(&log);
    assert!(report.is_clean(), "{report}");

    let (_, csv) = send(&app, Method::GET, &format!("/api/v1/sessions/{id}/labels"), None).await;
    let csv = String::from_utf8(csv).unwrap();
    let labels = extract_labels(&log);
    assert_eq!(csv.lines().count(), labels.pairs.len() + 1);
    let accepted: Vec<u64> = pattern.iter().enumerate().filter(|(_, &ok)| ok).map(|(i, _)| i as u64).collect();
    assert_eq!(labels.accepted_trials, accepted);
    for row in csv.lines().skip(1) {
        let trial: u64 = row.split(',').nth(5).unwrap().parse().unwrap();
        assert!(accepted.contains(&trial), "{row}");
    }
}

#[tokio::test]
async fn replay_is_byte_identical() {
    let pattern = [true, true, false, true, false, false];
    let mut exports = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let app = service(dir.path());
        let id = run_transcript(&app, 2024, &pattern).await;
        exports.push(send(&app, Method::GET, &format!("/api/v1/sessions/{id}/export"), None).await.1);
    }
    assert_eq!(exports[0], exports[1]);
}

#[tokio::test]
async fn sessions_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let id = {
        let app = service(dir.path());
        let id = create(&app, json!({ "seed": 8 })).await;
        let t0 = next_trial(&app, &id).await;
        send(&app, Method::POST, &format!("/api/v1/sessions/{id}/trials/0/entry"), Some(json!({ "entered": t0.code, "ts": 100 }))).await;
        next_trial(&app, &id).await;
        id
    };
    let app = service(dir.path());
    let (status, _) = send(&app, Method::GET, &format!("/api/v1/sessions/{id}/trials/next"), None).await;
    assert_eq!(status, StatusCode::CONFLICT, "trial 1 is still pending after restart");
    let (status, _) = send(&app, Method::POST, &format!("/api/v1/sessions/{id}/trials/1/entry"), Some(json!({ "entered": "0000", "ts": 50 }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "clock restored from the log");
    let (status, _) = send(&app, Method::POST, &format!("/api/v1/sessions/{id}/trials/1/entry"), Some(json!({ "entered": "0000", "ts": 150 }))).await;
    assert_eq!(status, StatusCode::OK);
    let fresh = create(&app, json!({})).await;
    assert_ne!(fresh, id);
    send(&app, Method::POST, &format!("/api/v1/sessions/{id}/finalize"), None).await;
    let (_, bytes) = send(&app, Method::GET, &format!("/api/v1/sessions/{id}/export"), None).await;
    let log = parse_session(&bytes).unwrap();
    assert_eq!(log.trials().count(), 2);
    assert_eq!(log.entries().count(), 2);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_sessions_do_not_interleave() {
    let dir = tempfile::tempdir().unwrap();
    let app = service(dir.path());
    let mut tasks = Vec::new();
    for seed in 0..8u64 {
        let app = app.clone();
        tasks.push(tokio::spawn(async move { run_transcript(&app, 100 + seed, &[true, false, true]).await }));
    }
    for task in tasks {
        let id = task.await.unwrap();
        let log = parse_session(&std::fs::read(dir.path().join(&id).join("session.log")).unwrap()).unwrap();
        assert_eq!(log.meta.session_id, id);
        assert!(validate_session(&log).is_clean());
        assert_eq!(log.trials().count(), 3);
    }
}

#[tokio::test]
async fn serves_static_bundle() {
    let data = tempfile::tempdir().unwrap();
    let bundle = tempfile::tempdir().unwrap();
    std::fs::write(bundle.path().join("index.html"), "<html>capture</html>").unwrap();
    let app = gazecode_service::app(gazecode_service::ServiceConfig {
        data_dir: data.path().to_path_buf(),
        static_dir: Some(bundle.path().to_path_buf()),
        ..Default::default()
    })
    .unwrap();
    let (status, body) = send(&app, Method::GET, "/index.html", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<html>capture</html>");
    let (status, _) = send(&app, Method::GET, "/api/v1/health", None).await;
    assert_eq!(status, StatusCode::OK);
}
