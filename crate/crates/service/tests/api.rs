use std::collections::VecDeque;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use leadforge_core::bundled_fixtures_dir;
use leadforge_core::orchestrator::{run_pipeline, PipelineRequest, Scripted, TraceEvent};
use leadforge_core::pbpk::{Route, PROFILE_CSV_HEADER};
use leadforge_core::Execution;
use leadforge_service::{profile_csv, router, AppState, ErrorBody, RunSession, RunStatus};
use serde_json::{json, Value};
use tower::ServiceExt;

const TASK: &str = "I want to discover drugs for Diabetes.";

fn app() -> Router {
    router(AppState::new(bundled_fixtures_dir(), Execution::default()))
}

async fn call(
    app: &Router,
    method: Method,
    uri: &str,
    body: Option<&str>,
) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(
            body.map(|b| Body::from(b.to_string()))
                .unwrap_or_else(Body::empty),
        )
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (
        status,
        resp.into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec(),
    )
}

async fn json_call(
    app: &Router,
    method: Method,
    uri: &str,
    body: Option<&str>,
) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

async fn create(app: &Router, fixture: &str) -> String {
    let body = json!({ "task": TASK, "fixture": fixture }).to_string();
    let (s, v) = json_call(app, Method::POST, "/runs", Some(&body)).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    assert_eq!(v["status"], "running");
    v["id"].as_str().unwrap().to_string()
}

async fn session(app: &Router, id: &str) -> RunSession {
    let (s, b) = call(app, Method::GET, &format!("/runs/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    serde_json::from_slice(&b).unwrap()
}

/// Polls until the run parks or finishes.
async fn settle(app: &Router, id: &str) -> RunSession {
    let start = Instant::now();
    loop {
        let s = session(app, id).await;
        assert_eq!(
            s.pending_decision.is_some(),
            s.status == RunStatus::AwaitingDecision
        );
        if s.status != RunStatus::Running {
            return s;
        }
        assert!(
            start.elapsed() < Duration::from_secs(60),
            "run {id} never settled"
        );
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
}

async fn trace(app: &Router, id: &str, since: u64) -> Vec<TraceEvent> {
    let (s, b) = call(
        app,
        Method::GET,
        &format!("/runs/{id}/trace?since={since}"),
        None,
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    serde_json::from_slice(&b).unwrap()
}

fn error_code(v: &Value) -> String {
    let e: ErrorBody = serde_json::from_value(v.clone()).unwrap();
    assert!(!e.message.is_empty());
    e.code
}

/// Answers gates the way the fixture's decision script does.
async fn drive_to_end(app: &Router, id: &str) -> RunSession {
    let mut targets =
        VecDeque::from([json!({ "gate": "target_approval", "approve": true, "target": "HNF1B" })]);
    let mut steering =
        VecDeque::from([json!({ "gate": "steering", "text": "improve metabolic stability" })]);
    loop {
        let s = settle(app, id).await;
        let Some(p) = s.pending_decision else {
            return s;
        };
        let payload = match p.gate.as_str() {
            "target_approval" => targets
                .pop_front()
                .unwrap_or(json!({ "gate": "target_approval", "approve": true })),
            _ => steering
                .pop_front()
                .unwrap_or(json!({ "gate": "steering" })),
        };
        let (st, v) = json_call(
            app,
            Method::POST,
            &format!("/runs/{id}/decision"),
            Some(&payload.to_string()),
        )
        .await;
        assert_eq!(st, StatusCode::OK, "{v}");
    }
}

fn scripted_result() -> leadforge_core::orchestrator::RunResult {
    let dir = bundled_fixtures_dir().join("diabetes");
    let req = PipelineRequest::from_fixture(TASK, &dir).unwrap();
    let mut script = Scripted::load(&dir.join("decisions.txt")).unwrap();
    run_pipeline(&req, &mut script)
}

#[tokio::test(flavor = "multi_thread")]
async fn creates_get_distinct_ids() {
    let app = app();
    let a = create(&app, "diabetes").await;
    let b = create(&app, "pancreatic").await;
    assert_ne!(a, b);
    let s = session(&app, &a).await;
    assert_eq!(s.id, a);
    assert!(s.result.is_none());
}

#[tokio::test(flavor = "multi_thread")]
async fn malformed_creates_are_rejected() {
    let app = app();
    for (body, code) in [
        (r#"{"fixture":"diabetes"}"#, "bad_request"),
        (r#"{"task":"   ","fixture":"diabetes"}"#, "bad_request"),
        (r#"{"task":"Diabetes"}"#, "bad_request"),
        ("not json", "bad_request"),
        (
            r#"{"task":"Diabetes","fixture":"atlantis"}"#,
            "unknown_fixture",
        ),
        (
            r#"{"task":"Diabetes","fixture":"../fixtures"}"#,
            "unknown_fixture",
        ),
    ] {
        let (s, v) = json_call(&app, Method::POST, "/runs", Some(body)).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{body}");
        assert_eq!(error_code(&v), code, "{body}");
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn unknown_runs_are_not_found() {
    let app = app();
    for (m, uri, body) in [
        (Method::GET, "/runs/nope", None),
        (Method::GET, "/runs/nope/trace", None),
        (Method::GET, "/runs/nope/profile/0", None),
        (
            Method::POST,
            "/runs/nope/decision",
            Some(r#"{"gate":"steering"}"#),
        ),
    ] {
        let (s, v) = json_call(&app, m, uri, body).await;
        assert_eq!(s, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(error_code(&v), "not_found");
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn target_gate_consumes_one_decision() {
    let app = app();
    let id = create(&app, "diabetes").await;
    let s = settle(&app, &id).await;
    let pending = s.pending_decision.expect("run parks at the target gate");
    assert_eq!(pending.gate.as_str(), "target_approval");
    assert!(pending.context["shortlist"]
        .as_array()
        .is_some_and(|l| !l.is_empty()));
    let uri = format!("/runs/{id}/decision");

    let (st, v) = json_call(
        &app,
        Method::POST,
        &uri,
        Some(r#"{"gate":"steering","text":"x"}"#),
    )
    .await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(error_code(&v), "conflict");
    let (st, _) = json_call(
        &app,
        Method::POST,
        &uri,
        Some(r#"{"gate":"target_approval"}"#),
    )
    .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);

    let approve = r#"{"gate":"target_approval","approve":true,"target":"HNF1B"}"#;
    let (st, v) = json_call(&app, Method::POST, &uri, Some(approve)).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["status"], "running");
    let (st, v) = json_call(&app, Method::POST, &uri, Some(approve)).await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(error_code(&v), "conflict");

    let end = drive_to_end(&app, &id).await;
    assert!(end.status.is_finished());
    assert_eq!(end.result.unwrap().target.unwrap().chosen, "HNF1B");
    let (st, _) = json_call(&app, Method::POST, &uri, Some(approve)).await;
    assert_eq!(st, StatusCode::CONFLICT);
}

#[tokio::test(flavor = "multi_thread")]
async fn trace_polling_is_incremental() {
    let app = app();
    let id = create(&app, "diabetes").await;
    settle(&app, &id).await;
    let all = trace(&app, &id, 0).await;
    assert!(!all.is_empty());
    assert!(all.iter().enumerate().all(|(i, e)| e.seq == i as u64));
    // parked: nothing new after the last event
    assert!(trace(&app, &id, all.len() as u64).await.is_empty());
    let tail = trace(&app, &id, 3).await;
    assert_eq!(tail, all[3..]);
    let (st, v) = json_call(
        &app,
        Method::GET,
        &format!("/runs/{id}/trace?since=soon"),
        None,
    )
    .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&v), "bad_request");
}

#[tokio::test(flavor = "multi_thread")]
async fn service_run_equals_scripted_run() {
    let app = app();
    let id = create(&app, "diabetes").await;
    let end = drive_to_end(&app, &id).await;
    assert_eq!(end.status, RunStatus::FinishedSuccess);
    let served = end.result.unwrap();
    assert_eq!(
        served.without_timestamps(),
        scripted_result().without_timestamps()
    );
    // the live trace is the result trace, event for event
    assert_eq!(trace(&app, &id, 0).await, served.trace);
}

#[tokio::test(flavor = "multi_thread")]
async fn concurrent_runs_do_not_interfere() {
    let app = app();
    let ids = [
        create(&app, "diabetes").await,
        create(&app, "diabetes").await,
    ];
    let (a, b) = tokio::join!(drive_to_end(&app, &ids[0]), drive_to_end(&app, &ids[1]));
    let (a, b) = (a.result.unwrap(), b.result.unwrap());
    assert_eq!(a.without_timestamps(), b.without_timestamps());
}

#[tokio::test(flavor = "multi_thread")]
async fn profiles_follow_assessed_candidates() {
    let app = app();
    let id = create(&app, "diabetes").await;
    let result = drive_to_end(&app, &id).await.result.unwrap();
    for (i, v) in result.verdicts.iter().enumerate() {
        for route in [Route::Oral, Route::IvBolus, Route::IvInfusion] {
            let uri = format!("/runs/{id}/profile/{i}?route={}", route.as_str());
            let (st, body) = call(&app, Method::GET, &uri, None).await;
            match profile_csv(&v.admet, route) {
                Ok(expected) => {
                    assert_eq!(st, StatusCode::OK, "{uri}");
                    let text = String::from_utf8(body).unwrap();
                    assert_eq!(text.lines().next(), Some(PROFILE_CSV_HEADER));
                    assert_eq!(text, expected);
                }
                Err(_) => assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY),
            }
        }
    }
    let n = result.verdicts.len();
    let (st, _) = call(&app, Method::GET, &format!("/runs/{id}/profile/{n}"), None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    let (st, _) = call(
        &app,
        Method::GET,
        &format!("/runs/{id}/profile/0?route=nasal"),
        None,
    )
    .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, _) = call(
        &app,
        Method::GET,
        &format!("/runs/{id}/profile/first"),
        None,
    )
    .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
}
