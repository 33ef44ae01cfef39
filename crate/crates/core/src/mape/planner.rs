use super::analyzer::{AnalysisReport, Violation};
use crate::knowledge::{AdaptationPolicy, Condition, KnowledgeStore, PolicyKind, Tactic, TacticKind, GOAL_DRIFT};
use crate::spectrum::ModelId;

/// What fired a tactic, as logged in the adaptation event.
#[derive(Debug, Clone, PartialEq)]
pub struct Trigger {
    pub goal: String,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub tactic: Tactic,
    pub trigger: Option<Trigger>,
}

impl Plan {
    fn noop() -> Self {
        Self { tactic: Tactic::NoOp, trigger: None }
    }
}

pub struct PlanContext<'a> {
    pub current_model: ModelId,
    pub deployed_version: Option<u64>,
    pub store: &'a KnowledgeStore,
    pub reuse_max_distance: f64,
}

/// First rule whose condition matches a reported violation wins. Only
/// rule-based policies plan from analysis; static and round-robin policies
/// always yield `NoOp` here.
pub fn plan(report: &AnalysisReport, policy: &AdaptationPolicy, ctx: &PlanContext<'_>) -> Plan {
    if policy.kind != PolicyKind::Rules {
        return Plan::noop();
    }
    for rule in &policy.rules {
        let (violation, goal): (&Violation, String) = match rule.condition {
            Condition::Drift => match report.drift_violation().filter(|_| report.drift_flag) {
                Some(v) => (v, GOAL_DRIFT.to_string()),
                None => continue,
            },
            Condition::Goal { metric, direction } => match report.violation(metric, direction) {
                Some(v) => (v, metric.as_str().to_string()),
                None => continue,
            },
        };
        let tactic = resolve(rule.tactic, rule.tactic_arg, report, ctx);
        return Plan {
            tactic,
            trigger: Some(Trigger { goal, value: violation.value, threshold: violation.effective_threshold }),
        };
    }
    Plan::noop()
}

fn resolve(kind: TacticKind, arg: Option<ModelId>, report: &AnalysisReport, ctx: &PlanContext<'_>) -> Tactic {
    match kind {
        TacticKind::SwitchUp => ctx.current_model.up().map_or(Tactic::NoOp, |_| Tactic::SwitchUp),
        TacticKind::SwitchDown => ctx.current_model.down().map_or(Tactic::NoOp, |_| Tactic::SwitchDown),
        TacticKind::SwitchTo => match arg {
            Some(m) if m != ctx.current_model => Tactic::SwitchTo(m),
            _ => Tactic::NoOp,
        },
        TacticKind::Retrain => Tactic::Retrain,
        TacticKind::ReuseVersion => ctx
            .store
            .find_similar_version_where(
                &report.snapshot.current_signature,
                ctx.current_model,
                ctx.reuse_max_distance,
                |v| Some(v.version_id) != ctx.deployed_version,
            )
            .map_or(Tactic::Retrain, |v| Tactic::ReuseVersion(v.version_id)),
        TacticKind::NoOp => Tactic::NoOp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::{Direction, Metric, ModelVersion};
    use crate::mape::MetricsSnapshot;
    use crate::spectrum::weights::LinearWeights;
    use crate::spectrum::{DataSignature, Weights};

    fn sig(mean: f64) -> DataSignature {
        DataSignature { mean, std: 10.0, p10: mean, p50: mean, p90: mean, n: 250 }
    }

    fn report(violations: Vec<Violation>) -> AnalysisReport {
        let drift_flag = violations.iter().any(|v| v.metric == Metric::DriftScore);
        AnalysisReport {
            snapshot: MetricsSnapshot {
                window_start_seq: 0,
                window_end_seq: 49,
                rolling_mae: 0.0,
                mean_latency_ms: 0.0,
                energy_per_inference_j: 0.0,
                drift_score: 0.0,
                current_signature: sig(100.0),
            },
            violations,
            drift_flag,
        }
    }

    fn v(metric: Metric) -> Violation {
        Violation { metric, direction: Direction::Upper, value: 2.0, effective_threshold: 1.0 }
    }

    fn ctx(store: &KnowledgeStore, model: ModelId) -> PlanContext<'_> {
        PlanContext { current_model: model, deployed_version: None, store, reuse_max_distance: 0.5 }
    }

    fn store_lin(store: &KnowledgeStore, mean: f64) -> u64 {
        store
            .store_version(ModelVersion {
                version_id: 0,
                model_id: ModelId::Lin,
                trained_at_seq: 0,
                signature: sig(mean),
                weights: Weights::Lin(LinearWeights { coef: [0.0; 5], intercept: 0.0 }).encode(),
                training_cost_j: 0.0,
            })
            .unwrap()
    }

    #[test]
    fn energy_violation_on_mlp_switches_down() {
        let store = KnowledgeStore::new();
        let p = plan(&report(vec![v(Metric::EnergyPerInferenceJ)]), &AdaptationPolicy::harmone(), &ctx(&store, ModelId::Mlp));
        assert_eq!(p.tactic, Tactic::SwitchDown);
        assert_eq!(p.trigger.unwrap().goal, "energy_per_inference_j");
    }

    #[test]
    fn drift_reuses_a_matching_version() {
        let store = KnowledgeStore::new();
        let id = store_lin(&store, 100.0);
        let p = plan(&report(vec![v(Metric::DriftScore)]), &AdaptationPolicy::harmone(), &ctx(&store, ModelId::Lin));
        assert_eq!(p.tactic, Tactic::ReuseVersion(id));
        assert_eq!(p.trigger.unwrap().goal, "drift");
    }

    #[test]
    fn drift_without_a_match_retrains() {
        let store = KnowledgeStore::new();
        store_lin(&store, 200.0);
        let p = plan(&report(vec![v(Metric::DriftScore)]), &AdaptationPolicy::harmone(), &ctx(&store, ModelId::Lin));
        assert_eq!(p.tactic, Tactic::Retrain);
    }

    #[test]
    fn deployed_version_is_never_reused() {
        let store = KnowledgeStore::new();
        let id = store_lin(&store, 100.0);
        let mut c = ctx(&store, ModelId::Lin);
        c.deployed_version = Some(id);
        let p = plan(&report(vec![v(Metric::DriftScore)]), &AdaptationPolicy::harmone(), &c);
        assert_eq!(p.tactic, Tactic::Retrain);
    }

    #[test]
    fn nothing_to_do() {
        let store = KnowledgeStore::new();
        assert_eq!(plan(&report(vec![]), &AdaptationPolicy::harmone(), &ctx(&store, ModelId::Lin)), Plan::noop());
    }

    #[test]
    fn first_match_wins_and_edges_degrade() {
        let store = KnowledgeStore::new();
        let r = report(vec![v(Metric::EnergyPerInferenceJ), v(Metric::RollingMae)]);
        // rolling_mae precedes energy in the rule list
        let p = plan(&r, &AdaptationPolicy::harmone(), &ctx(&store, ModelId::Lin));
        assert_eq!(p.tactic, Tactic::SwitchUp);
        let p = plan(&r, &AdaptationPolicy::harmone(), &ctx(&store, ModelId::Mlp));
        assert_eq!(p.tactic, Tactic::NoOp);
        let p = plan(&report(vec![v(Metric::EnergyPerInferenceJ)]), &AdaptationPolicy::harmone(), &ctx(&store, ModelId::Lin));
        assert_eq!(p.tactic, Tactic::NoOp);
    }

    #[test]
    fn non_rule_policies_do_not_plan() {
        let store = KnowledgeStore::new();
        let r = report(vec![v(Metric::DriftScore)]);
        for p in [AdaptationPolicy::switch(), AdaptationPolicy::static_model(ModelId::Lin)] {
            assert_eq!(plan(&r, &p, &ctx(&store, ModelId::Lin)).tactic, Tactic::NoOp);
        }
    }
}
