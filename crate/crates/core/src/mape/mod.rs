//! The managing system's Monitor, Analyze, Plan and Execute stages.

mod analyzer;
mod boundary;
mod executor;
mod monitor;
mod planner;

pub use analyzer::{analyze, AnalysisReport, BoundaryStates, Violation};
pub use boundary::{update_dynamic_boundary, BoundaryState, Ewma};
pub use executor::{deploy_tier, execute, Execution};
pub use monitor::{monitor, MetricsSnapshot};
pub use planner::{plan, Plan, PlanContext, Trigger};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::knowledge::{
    AdaptationEvent, AdaptationPolicy, Outcome, PolicyKind, SustainabilityGoal, TacticKind, GOAL_SCHEDULE,
};
use crate::pipeline::ManagedPipeline;
use crate::spectrum::{DataSignature, ModelId, WindowSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapeConfig {
    /// Records per analysis window; one cycle runs per completed window.
    pub window_w: usize,
    /// Samples used by a retrain.
    pub retrain_r: usize,
    pub reuse_max_distance: f64,
}

impl Default for MapeConfig {
    fn default() -> Self {
        Self { window_w: 50, retrain_r: 500, reuse_max_distance: 0.5 }
    }
}

/// Drives the loop: call [`MapeEngine::after_step`] after every inference.
#[derive(Debug)]
pub struct MapeEngine {
    cfg: MapeConfig,
    states: BoundaryStates,
    reference: DataSignature,
    steps_since_switch: u64,
    last_cycle_end: u64,
    snapshots: Vec<MetricsSnapshot>,
}

impl MapeEngine {
    pub fn new(cfg: MapeConfig, reference: DataSignature) -> Self {
        Self {
            cfg,
            states: BoundaryStates::new(),
            reference,
            steps_since_switch: 0,
            last_cycle_end: 0,
            snapshots: Vec::new(),
        }
    }

    pub fn reference(&self) -> &DataSignature {
        &self.reference
    }

    /// Every snapshot analysed so far, in window order.
    pub fn snapshots(&self) -> &[MetricsSnapshot] {
        &self.snapshots
    }

    /// Runs whatever is due after an inference step and logs the resulting
    /// event. `training` is the warm-up data and `eval[s]` the sample behind
    /// telemetry record `s`.
    pub fn after_step(
        &mut self,
        pipeline: &mut ManagedPipeline,
        policy: &AdaptationPolicy,
        goals: &[SustainabilityGoal],
        training: &[WindowSample],
        eval: &[WindowSample],
    ) -> Result<Option<AdaptationEvent>> {
        let event = if policy.kind == PolicyKind::RoundRobin {
            self.round_robin(pipeline, policy, training)?
        } else {
            self.cycle(pipeline, policy, goals, training, eval)?
        };
        if let Some(e) = &event {
            pipeline.store().append_event(e.clone());
        }
        Ok(event)
    }

    fn round_robin(
        &mut self,
        pipeline: &mut ManagedPipeline,
        policy: &AdaptationPolicy,
        training: &[WindowSample],
    ) -> Result<Option<AdaptationEvent>> {
        self.steps_since_switch += 1;
        if self.steps_since_switch < policy.switch_interval {
            return Ok(None);
        }
        let steps = self.steps_since_switch;
        self.steps_since_switch = 0;
        let Some(before) = pipeline.deployed_model_id() else {
            return Ok(None);
        };
        let after = before.up().unwrap_or(ModelId::Lin);
        let seq = pipeline.next_seq();
        let timestamp = last_timestamp(pipeline);
        let v = deploy_tier(pipeline, after, training)?;
        Ok(Some(AdaptationEvent {
            seq,
            timestamp,
            goal: GOAL_SCHEDULE.to_string(),
            metric_value: steps as f64,
            threshold: policy.switch_interval as f64,
            tactic: TacticKind::SwitchTo,
            model_before: before,
            model_after: after,
            version_used: Some(v.version_id),
            outcome: Outcome::Applied,
            note: None,
        }))
    }

    fn cycle(
        &mut self,
        pipeline: &mut ManagedPipeline,
        policy: &AdaptationPolicy,
        goals: &[SustainabilityGoal],
        training: &[WindowSample],
        eval: &[WindowSample],
    ) -> Result<Option<AdaptationEvent>> {
        let w = self.cfg.window_w as u64;
        let done = pipeline.completed();
        if done == 0 || !done.is_multiple_of(w) || done == self.last_cycle_end {
            return Ok(None);
        }
        self.last_cycle_end = done;
        let (start, end) = (done - w, done);
        let window = pipeline.store().telemetry_range(start, end);
        let Some(inputs) = eval.get(start as usize..end as usize) else {
            return Ok(None);
        };
        let Some(snapshot) = monitor(&window, inputs, &self.reference) else {
            return Ok(None);
        };
        self.snapshots.push(snapshot.clone());
        let report = analyze(snapshot, goals, &mut self.states);

        let current = pipeline.deployed_model_id().ok_or(crate::Error::NoDeployedModel)?;
        let ctx = PlanContext {
            current_model: current,
            deployed_version: pipeline.deployed().map(|d| d.model.version_id),
            store: pipeline.store(),
            reuse_max_distance: self.cfg.reuse_max_distance,
        };
        let plan = plan(&report, policy, &ctx);
        let recent = recent_samples(training, &eval[..end as usize], self.cfg.retrain_r);
        let timestamp = window.last().map(|r| r.timestamp.clone()).unwrap_or_default();
        let execution = execute(&plan, pipeline, &recent, training, &timestamp)?;
        if let Some(r) = execution.new_reference {
            self.reference = r;
        }
        Ok(execution.event)
    }
}

fn last_timestamp(pipeline: &ManagedPipeline) -> String {
    let n = pipeline.next_seq();
    n.checked_sub(1)
        .and_then(|s| pipeline.store().read_telemetry(s, 1).pop())
        .map(|r| r.timestamp)
        .unwrap_or_default()
}

/// The last `r` samples of the training data followed by the completed
/// evaluation samples.
pub fn recent_samples(training: &[WindowSample], completed: &[WindowSample], r: usize) -> Vec<WindowSample> {
    let from_eval = completed.len().min(r);
    let from_train = (r - from_eval).min(training.len());
    let mut out = Vec::with_capacity(from_train + from_eval);
    out.extend_from_slice(&training[training.len() - from_train..]);
    out.extend_from_slice(&completed[completed.len() - from_eval..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64) -> WindowSample {
        WindowSample { lags: [x; 5], target: x }
    }

    #[test]
    fn recent_window_spans_training_and_eval() {
        let train: Vec<_> = (0..10).map(|i| s(i as f64)).collect();
        let eval: Vec<_> = (10..14).map(|i| s(i as f64)).collect();
        let r = recent_samples(&train, &eval, 6);
        assert_eq!(r.iter().map(|x| x.target).collect::<Vec<_>>(), [8.0, 9.0, 10.0, 11.0, 12.0, 13.0]);
        assert_eq!(recent_samples(&train, &eval, 3).len(), 3);
        assert_eq!(recent_samples(&train[..1], &eval[..1], 10).len(), 2);
    }
}
