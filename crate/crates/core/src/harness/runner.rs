use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use super::config::{RunConfig, RunSummary};
use super::metrics::compute_r2;
use crate::error::{Error, Result};
use crate::knowledge::{AdaptationPolicy, KnowledgeStore, Outcome, PolicyKind};
use crate::mape::{MapeEngine, MetricsSnapshot};
use crate::pipeline::{ingest, make_windows, ManagedPipeline, TimePoint};
use crate::spectrum::{signature, ModelId, LAGS};

/// Everything a finished run leaves behind besides the store's logs.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub snapshots: Vec<MetricsSnapshot>,
    /// Whether the run ended early on request.
    pub stopped: bool,
}

/// Optional controls for a run driven by the service.
#[derive(Default)]
pub struct RunHooks<'a> {
    /// Checked before each inference; the run ends cleanly once it is set.
    pub stop: Option<&'a AtomicBool>,
}

/// Replays `points` under `policy`, writing logs into `store`.
///
/// The first `split_fraction` of the points trains every tier (unbilled); the
/// rest, with drift applied, is replayed one inference at a time with a MAPE
/// cycle after every completed window. Goals are re-read from the store each
/// step, so they can change while the run is in flight.
pub fn run_on_store(
    config: &RunConfig,
    policy: &AdaptationPolicy,
    points: &[TimePoint],
    store: &Arc<KnowledgeStore>,
    hooks: RunHooks<'_>,
) -> Result<RunOutput> {
    config.validate(points.len())?;
    let split = config.split_index(points.len());
    let (train_pts, eval_raw) = points.split_at(split);
    let eval_pts = ingest(eval_raw, &config.drift_specs)?;
    let training = make_windows(train_pts)?;
    let mut stream: Vec<TimePoint> = train_pts[split - LAGS..].to_vec();
    stream.extend(eval_pts.iter().cloned());
    let eval = make_windows(&stream)?;
    debug_assert_eq!(eval.len(), eval_pts.len());

    store.reset_run();
    let mut pipeline = ManagedPipeline::new(store.clone(), config.energy, config.fit, config.seed);
    let initial = policy.pinned_model().unwrap_or(config.initial_model);
    let tiers: Vec<ModelId> = match policy.kind {
        PolicyKind::Static(m) => vec![m],
        _ => ModelId::ALL.to_vec(),
    };
    for m in tiers {
        pipeline.train_unbilled(m, &training)?;
    }
    let first = store.latest_version(initial).ok_or(Error::NoDeployedModel)?;
    pipeline.swap_model(&first)?;

    let mut engine = MapeEngine::new(config.mape(), signature(&training)?);
    let mut stopped = false;
    for (j, sample) in eval.iter().enumerate() {
        if hooks.stop.is_some_and(|s| s.load(Ordering::Relaxed)) {
            stopped = true;
            break;
        }
        pipeline.step(sample, &eval_pts[j].timestamp)?;
        if j + 1 < eval.len() {
            let goals = store.goals();
            engine.after_step(&mut pipeline, policy, &goals, &training, &eval)?;
        }
    }
    pipeline.finish()?;

    let summary = summarize(store, &policy.name, pipeline.cumulative_energy_j())?;
    Ok(RunOutput { summary, snapshots: engine.snapshots().to_vec(), stopped })
}

/// Builds the summary from the store's logs. R² is NaN when undefined (a run
/// stopped after fewer than two inferences, or a constant evaluation stream).
pub fn summarize(store: &KnowledgeStore, policy: &str, total_energy_j: f64) -> Result<RunSummary> {
    let records = store.read_telemetry(0, usize::MAX);
    let (mut preds, mut actuals) = (Vec::with_capacity(records.len()), Vec::with_capacity(records.len()));
    for r in &records {
        if let Some(a) = r.actual {
            preds.push(r.prediction);
            actuals.push(a);
        }
    }
    let r2 = match compute_r2(&preds, &actuals) {
        Ok(v) => v,
        Err(Error::UndefinedR2 | Error::InvalidInput(_)) => f64::NAN,
        Err(e) => return Err(e),
    };
    let events = store.read_events(0);
    let count = |o: Outcome| events.iter().filter(|e| e.outcome == o).count() as u64;
    let mut training_energy_j = 0.0;
    for e in events.iter().filter(|e| e.outcome == Outcome::Retrained) {
        if let Some(id) = e.version_used {
            training_energy_j += store.version(id)?.training_cost_j;
        }
    }
    let n = records.len() as u64;
    Ok(RunSummary {
        policy: policy.to_string(),
        r2,
        mean_latency_ms: if n == 0 { 0.0 } else { records.iter().map(|r| r.latency_ms).sum::<f64>() / n as f64 },
        total_energy_j,
        n_adaptations: events.len() as u64 - count(Outcome::Noop),
        n_retrains: count(Outcome::Retrained),
        n_reuses: count(Outcome::ReuseHit),
        n_inferences: n,
        training_energy_j,
    })
}

/// One full run on a private store.
pub fn run_scenario(config: &RunConfig, points: &[TimePoint]) -> Result<RunSummary> {
    Ok(run_scenario_detailed(config, points)?.0.summary)
}

/// Like [`run_scenario`], also returning the store for log inspection.
pub fn run_scenario_detailed(config: &RunConfig, points: &[TimePoint]) -> Result<(RunOutput, Arc<KnowledgeStore>)> {
    let store = Arc::new(KnowledgeStore::new());
    let policy = config.resolve_policy(&AdaptationPolicy::harmone())?;
    store.put_goals(config.goals.clone())?;
    store.set_policy(policy.clone());
    let out = run_on_store(config, &policy, points, &store, RunHooks::default())?;
    if out.summary.r2.is_nan() {
        return Err(Error::UndefinedR2);
    }
    Ok((out, store))
}
