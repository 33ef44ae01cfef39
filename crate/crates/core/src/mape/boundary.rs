use serde::{Deserialize, Serialize};

use crate::knowledge::{Direction, SustainabilityGoal};

/// Per-goal analyzer state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryState {
    /// `None` until the first observation.
    pub ewma: Option<Ewma>,
    pub consecutive_breaches: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ewma {
    pub mean: f64,
    pub var: f64,
}

/// Folds `value` into the EWMA band and returns the threshold that applied to
/// it. The threshold comes from the state *before* the update, so a jump is
/// judged against the band it jumped out of. The first observation seeds the
/// state with zero variance.
pub fn update_dynamic_boundary(
    state: BoundaryState,
    value: f64,
    goal: &SustainabilityGoal,
) -> (BoundaryState, f64) {
    let prior = state.ewma.unwrap_or(Ewma { mean: value, var: 0.0 });
    let band = goal.band_k * prior.var.sqrt();
    let threshold = match goal.direction {
        Direction::Upper => goal.static_threshold.min(prior.mean + band),
        Direction::Lower => goal.static_threshold.max(prior.mean - band),
    };
    let a = goal.ewma_alpha;
    let next = Ewma {
        mean: a * value + (1.0 - a) * prior.mean,
        var: a * (value - prior.mean).powi(2) + (1.0 - a) * prior.var,
    };
    (BoundaryState { ewma: Some(next), ..state }, threshold)
}
