use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::boundary::{update_dynamic_boundary, BoundaryState};
use super::monitor::MetricsSnapshot;
use crate::knowledge::{Direction, Metric, SustainabilityGoal};

pub type BoundaryStates = BTreeMap<(Metric, Direction), BoundaryState>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub metric: Metric,
    pub direction: Direction,
    pub value: f64,
    pub effective_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub snapshot: MetricsSnapshot,
    pub violations: Vec<Violation>,
    pub drift_flag: bool,
}

impl AnalysisReport {
    pub fn violation(&self, metric: Metric, direction: Direction) -> Option<&Violation> {
        self.violations.iter().find(|v| v.metric == metric && v.direction == direction)
    }

    pub fn drift_violation(&self) -> Option<&Violation> {
        self.violation(Metric::DriftScore, Direction::Upper)
    }
}

/// Compares the snapshot against every goal. A violation is reported once a
/// goal has breached for `hysteresis_n` consecutive windows, after which its
/// counter starts over. State for goals no longer configured is dropped.
pub fn analyze(snapshot: MetricsSnapshot, goals: &[SustainabilityGoal], states: &mut BoundaryStates) -> AnalysisReport {
    states.retain(|key, _| goals.iter().any(|g| g.key() == *key));
    let mut violations = Vec::new();
    for goal in goals {
        let value = snapshot.value(goal.metric);
        let state = states.entry(goal.key()).or_default();
        let threshold = if goal.dynamic {
            let (next, t) = update_dynamic_boundary(*state, value, goal);
            *state = next;
            t
        } else {
            goal.static_threshold
        };
        if goal.direction.breached(value, threshold) {
            state.consecutive_breaches += 1;
        } else {
            state.consecutive_breaches = 0;
        }
        if state.consecutive_breaches >= goal.hysteresis_n {
            state.consecutive_breaches = 0;
            violations.push(Violation {
                metric: goal.metric,
                direction: goal.direction,
                value,
                effective_threshold: threshold,
            });
        }
    }
    let drift_flag = violations.iter().any(|v| v.metric == Metric::DriftScore && v.direction == Direction::Upper);
    AnalysisReport { snapshot, violations, drift_flag }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::DataSignature;

    fn snap(mae: f64) -> MetricsSnapshot {
        MetricsSnapshot {
            window_start_seq: 0,
            window_end_seq: 49,
            rolling_mae: mae,
            mean_latency_ms: 0.0,
            energy_per_inference_j: 1.0,
            drift_score: 0.0,
            current_signature: DataSignature::from_values(&[1.0]).unwrap(),
        }
    }

    fn mae_goal(threshold: f64, n: u32) -> SustainabilityGoal {
        SustainabilityGoal { hysteresis_n: n, ..SustainabilityGoal::fixed(Metric::RollingMae, Direction::Upper, threshold) }
    }

    #[test]
    fn immediate_violation_with_hysteresis_one() {
        let mut st = BoundaryStates::new();
        let r = analyze(snap(2.0), &[mae_goal(1.5, 1)], &mut st);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].effective_threshold, 1.5);
        assert!(!r.drift_flag);
    }

    #[test]
    fn first_breach_only_counts() {
        let mut st = BoundaryStates::new();
        let r = analyze(snap(2.0), &[mae_goal(1.5, 3)], &mut st);
        assert!(r.violations.is_empty());
        assert_eq!(st[&(Metric::RollingMae, Direction::Upper)].consecutive_breaches, 1);
    }

    #[test]
    fn scripted_four_window_sequence() {
        let goals = [mae_goal(1.5, 3)];
        let mut st = BoundaryStates::new();
        let reported: Vec<bool> = [2.0, 2.0, 2.0, 2.0]
            .into_iter()
            .map(|m| !analyze(snap(m), &goals, &mut st).violations.is_empty())
            .collect();
        assert_eq!(reported, [false, false, true, false]);
        assert_eq!(st[&(Metric::RollingMae, Direction::Upper)].consecutive_breaches, 1);
    }

    #[test]
    fn a_pass_resets_the_counter() {
        let goals = [mae_goal(1.5, 2)];
        let mut st = BoundaryStates::new();
        let reported: Vec<bool> = [2.0, 1.0, 2.0, 2.0]
            .into_iter()
            .map(|m| !analyze(snap(m), &goals, &mut st).violations.is_empty())
            .collect();
        assert_eq!(reported, [false, false, false, true]);
    }

    #[test]
    fn no_goals_no_violations() {
        let mut st = BoundaryStates::new();
        st.insert((Metric::RollingMae, Direction::Upper), BoundaryState::default());
        assert!(analyze(snap(1e9), &[], &mut st).violations.is_empty());
        assert!(st.is_empty());
    }

    #[test]
    fn raising_the_threshold_never_adds_violations() {
        let series = [1.0, 3.0, 3.5, 2.0, 4.0, 4.5, 5.0, 0.5, 6.0, 6.0, 6.0, 1.0];
        let count = |t: f64| {
            let mut st = BoundaryStates::new();
            series
                .iter()
                .filter(|m| !analyze(snap(**m), &[mae_goal(t, 2)], &mut st).violations.is_empty())
                .count()
        };
        let counts: Vec<usize> = (0..8).map(|t| count(t as f64)).collect();
        assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
    }
}
