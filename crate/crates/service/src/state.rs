use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use harmonica_core::control::{RunState, RunStatus};
use harmonica_core::harness::{run_on_store, RunConfig, RunHooks, RunSummary, SYNTHETIC};
use harmonica_core::knowledge::{AdaptationPolicy, KnowledgeStore, LogKind};
use harmonica_core::pipeline::{parse_dataset_csv, TimePoint};
use parking_lot::Mutex;

use crate::error::{ApiError, ApiResult};

#[derive(Debug)]
struct Control {
    state: RunState,
    summary: Option<RunSummary>,
    error: Option<String>,
    stop: Arc<AtomicBool>,
}

/// Shared by every handler.
#[derive(Clone)]
pub struct AppState {
    pub store: Arc<KnowledgeStore>,
    data_dir: Arc<PathBuf>,
    control: Arc<Mutex<Control>>,
    next_dataset: Arc<AtomicU64>,
}

impl AppState {
    pub fn new(data_dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let data_dir = data_dir.into();
        std::fs::create_dir_all(data_dir.join("datasets"))?;
        std::fs::create_dir_all(data_dir.join("logs"))?;
        // continue numbering after datasets left by an earlier process
        let taken = std::fs::read_dir(data_dir.join("datasets"))?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                name.strip_prefix("ds-")?.strip_suffix(".csv")?.parse::<u64>().ok()
            })
            .max()
            .unwrap_or(0);
        Ok(Self {
            store: Arc::new(KnowledgeStore::new()),
            data_dir: Arc::new(data_dir),
            control: Arc::new(Mutex::new(Control {
                state: RunState::Idle,
                summary: None,
                error: None,
                stop: Arc::new(AtomicBool::new(false)),
            })),
            next_dataset: Arc::new(AtomicU64::new(taken + 1)),
        })
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    pub fn is_running(&self) -> bool {
        self.control.lock().state == RunState::Running
    }

    pub fn status(&self) -> RunStatus {
        let c = self.control.lock();
        RunStatus {
            state: c.state,
            current_seq: self.store.telemetry_len(),
            active_policy: self.store.policy().name.clone(),
            deployed_model: self.store.deployed().map(|(m, _)| m),
            summary: c.summary.clone(),
            error: c.error.clone(),
        }
    }

    /// Parses and stores an uploaded `timestamp,flow` CSV.
    pub fn save_dataset(&self, text: &str) -> ApiResult<String> {
        parse_dataset_csv(text)?;
        let id = format!("ds-{}", self.next_dataset.fetch_add(1, Ordering::Relaxed));
        std::fs::write(self.dataset_path(&id), text)?;
        Ok(id)
    }

    fn dataset_path(&self, id: &str) -> PathBuf {
        self.data_dir.join("datasets").join(format!("{id}.csv"))
    }

    /// Uploaded ids and `synthetic[:days[:seed]]`. File paths are not served.
    pub fn load_dataset(&self, id: &str) -> ApiResult<Vec<TimePoint>> {
        if id.starts_with(SYNTHETIC) {
            return Ok(harmonica_core::harness::resolve_dataset(id)?);
        }
        let safe = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        let path = self.dataset_path(id);
        if !safe || !path.is_file() {
            return Err(ApiError::not_found("unknown_dataset", format!("unknown dataset `{id}`")).within("dataset_id"));
        }
        Ok(parse_dataset_csv(&std::fs::read_to_string(path)?)?)
    }

    /// Validates `config` and launches it on a blocking thread.
    pub fn start(&self, config: RunConfig, policy: AdaptationPolicy, points: Vec<TimePoint>) -> ApiResult<()> {
        config.validate(points.len()).map_err(ApiError::from)?;
        let stop = {
            let mut c = self.control.lock();
            if c.state == RunState::Running {
                return Err(ApiError::conflict("a run is already in progress"));
            }
            self.store.reset_run();
            self.store.put_goals(config.goals.clone())?;
            self.store.set_policy(policy.clone());
            c.state = RunState::Running;
            c.summary = None;
            c.error = None;
            c.stop = Arc::new(AtomicBool::new(false));
            c.stop.clone()
        };
        tracing::info!(policy = %policy.name, dataset = %config.dataset_id, "run started");
        let app = self.clone();
        tokio::task::spawn_blocking(move || {
            let result = run_on_store(&config, &policy, &points, &app.store, RunHooks { stop: Some(&stop) });
            if let Err(e) = app.flush_logs() {
                tracing::warn!(error = %e, "could not write log files");
            }
            let mut c = app.control.lock();
            match result {
                Ok(out) => {
                    tracing::info!(r2 = out.summary.r2, energy = out.summary.total_energy_j, stopped = out.stopped, "run finished");
                    c.state = RunState::Finished;
                    c.summary = Some(out.summary);
                }
                Err(e) => {
                    tracing::warn!(error = %e, "run failed");
                    c.state = RunState::Failed;
                    c.error = Some(e.to_string());
                }
            }
        });
        Ok(())
    }

    /// Asks the current run to stop and waits for it to wind down.
    pub async fn stop(&self) -> ApiResult<()> {
        {
            let c = self.control.lock();
            if c.state != RunState::Running {
                return Err(ApiError::conflict("no run is in progress"));
            }
            c.stop.store(true, Ordering::Relaxed);
        }
        while self.is_running() {
            tokio::time::sleep(std::time::Duration::from_millis(5)).await;
        }
        Ok(())
    }

    fn flush_logs(&self) -> std::io::Result<()> {
        let dir = self.data_dir.join("logs");
        std::fs::write(dir.join("telemetry.csv"), self.store.export_csv(LogKind::Telemetry))?;
        std::fs::write(dir.join("adaptations.csv"), self.store.export_csv(LogKind::Adaptations))
    }
}
