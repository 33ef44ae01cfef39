//! Typed client for the Harmonica HTTP API.

use std::time::Duration;

use harmonica_core::control::{DatasetCreated, ErrorBody, RunState, RunStatus};
use harmonica_core::harness::RunConfig;
use harmonica_core::knowledge::{AdaptationEvent, SustainabilityGoal, TelemetryRecord};
use reqwest::{Response, StatusCode};
use serde::de::DeserializeOwned;
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),

    /// The service answered with an error body.
    #[error("{status}: {} ({})", body.message, body.code)]
    Api { status: StatusCode, body: ErrorBody },

    #[error("unexpected {status} response: {text}")]
    Unexpected { status: StatusCode, text: String },

    #[error("timed out waiting for the run to finish")]
    Timeout,
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } | ClientError::Unexpected { status, .. } => Some(*status),
            ClientError::Http(e) => e.status(),
            ClientError::Timeout => None,
        }
    }

    /// The error body, when the service sent one.
    pub fn body(&self) -> Option<&ErrorBody> {
        match self {
            ClientError::Api { body, .. } => Some(body),
            _ => None,
        }
    }
}

pub type Result<T, E = ClientError> = std::result::Result<T, E>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Self {
            base: base.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn check(resp: Response) -> Result<Response> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text().await?;
        Err(match serde_json::from_str::<ErrorBody>(&text) {
            Ok(body) => ClientError::Api { status, body },
            Err(_) => ClientError::Unexpected { status, text },
        })
    }

    async fn json<T: DeserializeOwned>(resp: Response) -> Result<T> {
        Ok(Self::check(resp).await?.json().await?)
    }

    pub async fn status(&self) -> Result<RunStatus> {
        Self::json(self.http.get(self.url("/api/status")).send().await?).await
    }

    /// Selects the active approach: a builtin name or an inline policy document.
    pub async fn set_approach(&self, policy: &Value) -> Result<Value> {
        Self::json(self.http.post(self.url("/api/approach")).json(policy).send().await?).await
    }

    pub async fn goals(&self) -> Result<Vec<SustainabilityGoal>> {
        Self::json(self.http.get(self.url("/api/goals")).send().await?).await
    }

    pub async fn set_goals(&self, goals: &[SustainabilityGoal]) -> Result<Vec<SustainabilityGoal>> {
        Self::json(self.http.post(self.url("/api/goals")).json(goals).send().await?).await
    }

    /// Posts raw goal JSON, for callers that want the service's validation.
    pub async fn set_goals_raw(&self, goals: &Value) -> Result<Vec<SustainabilityGoal>> {
        Self::json(self.http.post(self.url("/api/goals")).json(goals).send().await?).await
    }

    /// Uploads a `timestamp,flow` CSV and returns its dataset id.
    pub async fn upload_dataset(&self, csv: impl Into<String>) -> Result<String> {
        let resp = self
            .http
            .post(self.url("/api/dataset"))
            .header(reqwest::header::CONTENT_TYPE, "text/csv")
            .body(csv.into())
            .send()
            .await?;
        Ok(Self::json::<DatasetCreated>(resp).await?.dataset_id)
    }

    pub async fn start_run(&self, config: &RunConfig) -> Result<RunStatus> {
        Self::json(self.http.post(self.url("/api/run/start")).json(config).send().await?).await
    }

    /// Starts a run from raw JSON, which may omit goals to use the configured ones.
    pub async fn start_run_raw(&self, config: &Value) -> Result<RunStatus> {
        Self::json(self.http.post(self.url("/api/run/start")).json(config).send().await?).await
    }

    pub async fn stop_run(&self) -> Result<RunStatus> {
        Self::json(self.http.post(self.url("/api/run/stop")).send().await?).await
    }

    pub async fn telemetry(&self, since: u64, limit: Option<usize>) -> Result<Vec<TelemetryRecord>> {
        let mut req = self.http.get(self.url("/api/telemetry")).query(&[("since", since)]);
        if let Some(l) = limit {
            req = req.query(&[("limit", l)]);
        }
        Self::json(req.send().await?).await
    }

    pub async fn events(&self, since: u64) -> Result<Vec<AdaptationEvent>> {
        Self::json(self.http.get(self.url("/api/events")).query(&[("since", since)]).send().await?).await
    }

    pub async fn telemetry_csv(&self) -> Result<String> {
        Ok(Self::check(self.http.get(self.url("/api/logs/telemetry.csv")).send().await?).await?.text().await?)
    }

    pub async fn adaptations_csv(&self) -> Result<String> {
        Ok(Self::check(self.http.get(self.url("/api/logs/adaptations.csv")).send().await?).await?.text().await?)
    }

    /// Polls `/api/status` until the run is no longer running.
    pub async fn wait_for_run(&self, poll: Duration, timeout: Duration) -> Result<RunStatus> {
        let deadline = std::time::Instant::now() + timeout;
        loop {
            let s = self.status().await?;
            if s.state != RunState::Running {
                return Ok(s);
            }
            if std::time::Instant::now() >= deadline {
                return Err(ClientError::Timeout);
            }
            tokio::time::sleep(poll).await;
        }
    }
}
