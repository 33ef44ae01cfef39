use std::time::Duration;

use harmonica_client::Client;
use harmonica_core::control::RunState;
use harmonica_core::harness::RunConfig;
use harmonica_core::knowledge::{parse_telemetry_csv, Direction, Metric, SustainabilityGoal};
use reqwest::StatusCode;
use serde_json::json;

async fn spawn() -> (Client, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(harmonica_service::serve(listener, dir.path().to_path_buf()));
    (Client::new(format!("http://{addr}")), dir)
}

fn short_run(policy: &str) -> RunConfig {
    RunConfig::new("synthetic:3").with_policy(policy)
}

#[tokio::test]
async fn idle_status_and_approach_errors() {
    let (c, _dir) = spawn().await;
    let s = c.status().await.unwrap();
    assert_eq!(s.state, RunState::Idle);
    assert_eq!(s.active_policy, "harmone");
    assert_eq!(s.current_seq, 0);

    let doc = c.set_approach(&json!("static:lin")).await.unwrap();
    assert_eq!(doc["name"], "static:lin");
    assert_eq!(c.status().await.unwrap().active_policy, "static:lin");

    let e = c.set_approach(&json!("nope")).await.unwrap_err();
    assert_eq!(e.status(), Some(StatusCode::NOT_FOUND));

    let bad = json!({"name": "p", "rules": [{"metric": "speed", "direction": "upper", "tactic": "retrain"}]});
    let e = c.set_approach(&bad).await.unwrap_err();
    assert_eq!(e.status(), Some(StatusCode::BAD_REQUEST));
    assert_eq!(e.body().unwrap().field.as_deref(), Some("rules[0].metric"));

    let e = c.stop_run().await.unwrap_err();
    assert_eq!(e.status(), Some(StatusCode::CONFLICT));
}

#[tokio::test]
async fn goal_validation_names_the_field() {
    let (c, _dir) = spawn().await;
    let goals = vec![SustainabilityGoal::fixed(Metric::RollingMae, Direction::Upper, 40.0)];
    assert_eq!(c.set_goals(&goals).await.unwrap(), goals);
    assert_eq!(c.goals().await.unwrap(), goals);
    let e = c
        .set_goals_raw(&json!([{"metric": "rolling_mae", "direction": "upper", "static_threshold": 1, "hysteresis_n": 0}]))
        .await
        .unwrap_err();
    assert_eq!(e.status(), Some(StatusCode::BAD_REQUEST));
    assert_eq!(e.body().unwrap().field.as_deref(), Some("goals[0].hysteresis_n"));
}

#[tokio::test]
async fn dataset_upload_and_run() {
    let (c, dir) = spawn().await;
    let e = c.upload_dataset("timestamp,flow\n2024-01-01T00:00:00,abc\n").await.unwrap_err();
    assert_eq!(e.status(), Some(StatusCode::BAD_REQUEST));
    assert_eq!(e.body().unwrap().field.as_deref(), Some("line 2"));

    let points = harmonica_core::harness::resolve_dataset("synthetic:3").unwrap();
    let id = c.upload_dataset(harmonica_core::pipeline::dataset_csv(&points)).await.unwrap();

    let mut cfg = short_run("static:ridge2");
    cfg.dataset_id = id;
    c.start_run(&cfg).await.unwrap();
    let done = c.wait_for_run(Duration::from_millis(10), Duration::from_secs(60)).await.unwrap();
    assert_eq!(done.state, RunState::Finished);
    let summary = done.summary.unwrap();
    assert_eq!(summary.n_inferences, 864 - 518);

    let csv = c.telemetry_csv().await.unwrap();
    let polled = c.telemetry(0, None).await.unwrap();
    assert_eq!(parse_telemetry_csv(&csv).unwrap(), polled);
    assert!(dir.path().join("logs/telemetry.csv").is_file());

    let e = c.start_run(&RunConfig::new("no-such-dataset")).await.unwrap_err();
    assert_eq!(e.status(), Some(StatusCode::NOT_FOUND));
    let mut bad = short_run("harmone");
    bad.window_w = 0;
    let e = c.start_run(&bad).await.unwrap_err();
    assert_eq!(e.body().unwrap().field.as_deref(), Some("window_w"));
}

#[tokio::test]
async fn conflicts_while_running() {
    let (c, _dir) = spawn().await;
    c.start_run(&RunConfig::new("synthetic:120").with_policy("static:mlp")).await.unwrap();
    let e = c.start_run(&short_run("static:lin")).await.unwrap_err();
    assert_eq!(e.status(), Some(StatusCode::CONFLICT));
    let e = c.set_approach(&json!("switch")).await.unwrap_err();
    assert_eq!(e.status(), Some(StatusCode::CONFLICT));
    // goals may change mid-run
    let goals = vec![SustainabilityGoal::fixed(Metric::LatencyMs, Direction::Upper, 1.0)];
    c.set_goals(&goals).await.unwrap();

    let stopped = c.stop_run().await.unwrap();
    assert_eq!(stopped.state, RunState::Finished);
    let n = stopped.summary.unwrap().n_inferences;
    assert!(n < 120 * 288 - (0.6f64 * (120 * 288) as f64) as u64);
    assert_eq!(c.telemetry(0, Some(usize::MAX)).await.unwrap().len() as u64, n);
}
