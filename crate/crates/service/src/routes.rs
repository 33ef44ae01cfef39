use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use harmonica_core::control::{DatasetCreated, RunStatus};
use harmonica_core::harness::RunConfig;
use harmonica_core::knowledge::{parse_goals, AdaptationEvent, AdaptationPolicy, LogKind, SustainabilityGoal, TelemetryRecord};
use serde::Deserialize;
use serde_json::Value;

use crate::error::{json_error, ApiError, ApiResult};
use crate::state::AppState;

/// Default and maximum page size of `/api/telemetry`.
pub const TELEMETRY_PAGE: usize = 1000;
pub const TELEMETRY_PAGE_MAX: usize = 10_000;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/status", get(status))
        .route("/api/approach", post(set_approach))
        .route("/api/goals", get(get_goals).post(set_goals))
        .route("/api/dataset", post(upload_dataset))
        .route("/api/run/start", post(start_run))
        .route("/api/run/stop", post(stop_run))
        .route("/api/telemetry", get(telemetry))
        .route("/api/events", get(events))
        .route("/api/logs/telemetry.csv", get(telemetry_csv))
        .route("/api/logs/adaptations.csv", get(adaptations_csv))
        .with_state(state)
}

fn parse_json(body: &[u8]) -> ApiResult<Value> {
    serde_json::from_slice(body).map_err(|e| ApiError::invalid("", format!("malformed JSON: {e}")))
}

async fn status(State(app): State<AppState>) -> Json<RunStatus> {
    Json(app.status())
}

async fn set_approach(State(app): State<AppState>, body: Bytes) -> ApiResult<Json<Value>> {
    if app.is_running() {
        return Err(ApiError::conflict("the approach cannot change while a run is in progress"));
    }
    let value = parse_json(&body)?;
    let policy = AdaptationPolicy::from_json(&value)?;
    let doc = policy.to_json();
    app.store.set_policy(policy);
    Ok(Json(doc))
}

async fn get_goals(State(app): State<AppState>) -> Json<Vec<SustainabilityGoal>> {
    Json(app.store.goals().to_vec())
}

/// Accepts a goal list or `{"goals": [...]}`. Allowed mid-run.
async fn set_goals(State(app): State<AppState>, body: Bytes) -> ApiResult<Json<Vec<SustainabilityGoal>>> {
    let value = parse_json(&body)?;
    let goals = match &value {
        Value::Object(obj) if obj.contains_key("goals") => {
            parse_goals(&obj["goals"]).map_err(|e| ApiError::from(e).within("goals"))?
        }
        other => parse_goals(other)?,
    };
    app.store.put_goals(goals.clone())?;
    Ok(Json(goals))
}

async fn upload_dataset(State(app): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<DatasetCreated>)> {
    let text = std::str::from_utf8(&body).map_err(|_| ApiError::invalid("", "dataset must be UTF-8 text"))?;
    let dataset_id = app.save_dataset(text)?;
    Ok((StatusCode::CREATED, Json(DatasetCreated { dataset_id })))
}

/// Starts a run from a [`RunConfig`]. Omitted goals and policy fall back to
/// the ones currently configured.
async fn start_run(State(app): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<RunStatus>)> {
    let value = parse_json(&body)?;
    let has_goals = value.get("goals").is_some();
    let mut config: RunConfig = serde_path_to_error::deserialize(&value).map_err(json_error)?;
    if !has_goals {
        config.goals = app.store.goals().to_vec();
    }
    if app.is_running() {
        return Err(ApiError::conflict("a run is already in progress"));
    }
    let policy = config.resolve_policy(&app.store.policy())?;
    let points = app.load_dataset(&config.dataset_id)?;
    app.start(config, policy, points)?;
    Ok((StatusCode::ACCEPTED, Json(app.status())))
}

async fn stop_run(State(app): State<AppState>) -> ApiResult<Json<RunStatus>> {
    app.stop().await?;
    Ok(Json(app.status()))
}

#[derive(Debug, Deserialize)]
struct TelemetryQuery {
    #[serde(default)]
    since: u64,
    limit: Option<usize>,
}

async fn telemetry(State(app): State<AppState>, Query(q): Query<TelemetryQuery>) -> Json<Vec<TelemetryRecord>> {
    let limit = q.limit.unwrap_or(TELEMETRY_PAGE).min(TELEMETRY_PAGE_MAX);
    Json(app.store.read_telemetry(q.since, limit))
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    #[serde(default)]
    since: u64,
}

async fn events(State(app): State<AppState>, Query(q): Query<EventsQuery>) -> Json<Vec<AdaptationEvent>> {
    Json(app.store.read_events(q.since))
}

fn csv(text: String) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], text)
}

async fn telemetry_csv(State(app): State<AppState>) -> impl IntoResponse {
    csv(app.store.export_csv(LogKind::Telemetry))
}

async fn adaptations_csv(State(app): State<AppState>) -> impl IntoResponse {
    csv(app.store.export_csv(LogKind::Adaptations))
}
