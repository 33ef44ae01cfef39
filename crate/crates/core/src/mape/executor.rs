use std::sync::Arc;

use super::planner::{Plan, Trigger};
use crate::error::{Error, Result};
use crate::knowledge::{AdaptationEvent, ModelVersion, Outcome, Tactic, TacticKind};
use crate::pipeline::ManagedPipeline;
use crate::spectrum::{DataSignature, ModelId, WindowSample};

#[derive(Debug, Clone, Default)]
pub struct Execution {
    pub event: Option<AdaptationEvent>,
    /// New drift reference after a retrain or reuse.
    pub new_reference: Option<DataSignature>,
}

/// Deploys the newest version of `target`, training one on `provisioning`
/// first if the tier has never been trained. That provisioning fit is not
/// billed, the same as warm-up.
pub fn deploy_tier(
    pipeline: &mut ManagedPipeline,
    target: ModelId,
    provisioning: &[WindowSample],
) -> Result<Arc<ModelVersion>> {
    let version = match pipeline.store().latest_version(target) {
        Some(v) => v,
        None => pipeline.train_unbilled(target, provisioning)?,
    };
    pipeline.swap_model(&version)?;
    Ok(version)
}

/// Applies `plan` to the pipeline and builds the event to log. `recent` is the
/// retraining window; `timestamp` is that of the latest telemetry record.
pub fn execute(
    plan: &Plan,
    pipeline: &mut ManagedPipeline,
    recent: &[WindowSample],
    provisioning: &[WindowSample],
    timestamp: &str,
) -> Result<Execution> {
    let Some(trigger) = &plan.trigger else {
        return Ok(Execution::default());
    };
    let before = pipeline.deployed_model_id().ok_or(Error::NoDeployedModel)?;
    let seq = pipeline.next_seq();
    let event = |tactic: TacticKind, after: ModelId, version_used: Option<u64>, outcome: Outcome, note: Option<String>| {
        let Trigger { goal, value, threshold } = trigger.clone();
        AdaptationEvent {
            seq,
            timestamp: timestamp.to_string(),
            goal,
            metric_value: value,
            threshold,
            tactic,
            model_before: before,
            model_after: after,
            version_used,
            outcome,
            note,
        }
    };

    let target = match plan.tactic {
        Tactic::NoOp => return Ok(Execution::default()),
        Tactic::SwitchUp => before.up(),
        Tactic::SwitchDown => before.down(),
        Tactic::SwitchTo(m) => Some(m),
        Tactic::Retrain => {
            let kind = plan.tactic.kind();
            return Ok(match pipeline.retrain(before, recent) {
                Ok(v) => {
                    let e = event(kind, before, Some(v.version_id), Outcome::Retrained, None);
                    pipeline.swap_model(&v)?;
                    Execution { event: Some(e), new_reference: Some(v.signature) }
                }
                Err(err) => Execution {
                    event: Some(event(kind, before, None, Outcome::Noop, Some(format!("retrain failed: {err}")))),
                    new_reference: None,
                },
            });
        }
        Tactic::ReuseVersion(id) => {
            let v = pipeline.store().version(id)?;
            let e = event(TacticKind::ReuseVersion, v.model_id, Some(id), Outcome::ReuseHit, None);
            pipeline.swap_model(&v)?;
            return Ok(Execution { event: Some(e), new_reference: Some(v.signature) });
        }
    };
    let Some(target) = target else {
        return Ok(Execution::default());
    };
    let v = deploy_tier(pipeline, target, provisioning)?;
    let e = event(plan.tactic.kind(), target, Some(v.version_id), Outcome::Applied, None);
    Ok(Execution { event: Some(e), new_reference: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::EnergyConfig;
    use crate::knowledge::KnowledgeStore;
    use crate::spectrum::FitParams;

    fn samples(n: usize) -> Vec<WindowSample> {
        (0..n)
            .map(|i| {
                let x = (i as f64 * 0.7).sin() * 20.0 + 100.0;
                WindowSample { lags: [x, x + 1.0, x - 2.0, x + 0.5, x + 3.0], target: x + 1.0 }
            })
            .collect()
    }

    fn setup() -> (ManagedPipeline, Vec<WindowSample>) {
        let store = Arc::new(KnowledgeStore::new());
        let mut p = ManagedPipeline::new(store, EnergyConfig::cost_model(0.5), FitParams::default(), 1);
        let s = samples(60);
        deploy_tier(&mut p, ModelId::Lin, &s).unwrap();
        (p, s)
    }

    fn trigger() -> Option<Trigger> {
        Some(Trigger { goal: "drift".into(), value: 3.0, threshold: 1.0 })
    }

    #[test]
    fn switch_to_mlp() {
        let (mut p, s) = setup();
        let plan = Plan { tactic: Tactic::SwitchTo(ModelId::Mlp), trigger: trigger() };
        let e = execute(&plan, &mut p, &s, &s, "t").unwrap().event.unwrap();
        assert_eq!((e.model_before, e.model_after, e.outcome), (ModelId::Lin, ModelId::Mlp, Outcome::Applied));
        assert_eq!(p.deployed_model_id(), Some(ModelId::Mlp));
        // provisioning is unbilled
        assert_eq!(p.cumulative_energy_j(), 0.0);
    }

    #[test]
    fn reuse_costs_nothing() {
        let (mut p, s) = setup();
        let id = p.train_unbilled(ModelId::Lin, &s[..30]).unwrap().version_id;
        let plan = Plan { tactic: Tactic::ReuseVersion(id), trigger: trigger() };
        let x = execute(&plan, &mut p, &s, &s, "t").unwrap();
        let e = x.event.unwrap();
        assert_eq!((e.version_used, e.outcome), (Some(id), Outcome::ReuseHit));
        assert_eq!(p.cumulative_energy_j(), 0.0);
        assert_eq!(x.new_reference, Some(p.store().version(id).unwrap().signature));
    }

    #[test]
    fn retrain_charges_the_cost_ledger() {
        let (mut p, s) = setup();
        let plan = Plan { tactic: Tactic::Retrain, trigger: trigger() };
        let e = execute(&plan, &mut p, &s[..40], &s, "t").unwrap().event.unwrap();
        assert_eq!(e.outcome, Outcome::Retrained);
        assert_eq!(p.cumulative_energy_j(), 40.0 * 6.0 * 0.5);
        let r = p.step(&s[0], "u").unwrap();
        assert_eq!(r.cumulative_energy_j, 40.0 * 6.0 * 0.5 + 3.0);
        assert_eq!(e.seq, r.seq);
    }

    #[test]
    fn failed_retrain_logs_noop() {
        let (mut p, s) = setup();
        let plan = Plan { tactic: Tactic::Retrain, trigger: trigger() };
        let e = execute(&plan, &mut p, &s[..4], &s, "t").unwrap().event.unwrap();
        assert_eq!(e.outcome, Outcome::Noop);
        assert!(e.note.unwrap().contains("insufficient"));
        assert_eq!(p.cumulative_energy_j(), 0.0);
    }

    #[test]
    fn noop_logs_nothing() {
        let (mut p, s) = setup();
        let plan = Plan { tactic: Tactic::NoOp, trigger: trigger() };
        assert!(execute(&plan, &mut p, &s, &s, "t").unwrap().event.is_none());
    }
}
