use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::energy::EnergyConfig;
use crate::error::{Error, Result, ValidationError};
use crate::knowledge::{validate_goals, AdaptationPolicy, Direction, Metric, SustainabilityGoal};
use crate::mape::MapeConfig;
use crate::pipeline::{validate_drifts, DriftSpec};
use crate::spectrum::{FitParams, ModelId, LAGS, MIN_FIT_SAMPLES};

/// A complete experiment specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// An uploaded dataset id, a CSV path (local runs), or `synthetic[:days[:seed]]`.
    pub dataset_id: String,
    /// Policy name or inline document; the active approach when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Value>,
    #[serde(default = "default_goals")]
    pub goals: Vec<SustainabilityGoal>,
    #[serde(default = "default_window")]
    pub window_w: usize,
    #[serde(default = "default_retrain")]
    pub retrain_r: usize,
    #[serde(default = "default_reuse_distance")]
    pub reuse_max_distance: f64,
    /// Ranges index the evaluation stream.
    #[serde(default)]
    pub drift_specs: Vec<DriftSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub energy: EnergyConfig,
    /// Starting model for rule-based policies; static and switch pin their own.
    #[serde(default = "default_initial_model")]
    pub initial_model: ModelId,
    #[serde(default = "default_split")]
    pub split_fraction: f64,
    #[serde(default)]
    pub fit: FitParams,
}

fn default_window() -> usize {
    50
}
fn default_retrain() -> usize {
    500
}
fn default_reuse_distance() -> f64 {
    0.5
}
fn default_initial_model() -> ModelId {
    ModelId::Mlp
}
fn default_split() -> f64 {
    0.6
}

/// Drift on the input signature, an accuracy ceiling and an energy ceiling.
pub fn default_goals() -> Vec<SustainabilityGoal> {
    vec![
        SustainabilityGoal::fixed(Metric::DriftScore, Direction::Upper, 1.2),
        SustainabilityGoal {
            dynamic: true,
            ..SustainabilityGoal::fixed(Metric::RollingMae, Direction::Upper, 60.0)
        },
        SustainabilityGoal::fixed(Metric::EnergyPerInferenceJ, Direction::Upper, 10.0),
    ]
}

impl RunConfig {
    pub fn new(dataset_id: impl Into<String>) -> Self {
        Self {
            dataset_id: dataset_id.into(),
            policy: None,
            goals: default_goals(),
            window_w: default_window(),
            retrain_r: default_retrain(),
            reuse_max_distance: default_reuse_distance(),
            drift_specs: Vec::new(),
            seed: 0,
            energy: EnergyConfig::default(),
            initial_model: default_initial_model(),
            split_fraction: default_split(),
            fit: FitParams::default(),
        }
    }

    pub fn with_policy(mut self, name: &str) -> Self {
        self.policy = Some(Value::String(name.to_string()));
        self
    }

    pub fn mape(&self) -> MapeConfig {
        MapeConfig {
            window_w: self.window_w,
            retrain_r: self.retrain_r,
            reuse_max_distance: self.reuse_max_distance,
        }
    }

    /// Resolves the policy field, falling back to `active`.
    pub fn resolve_policy(&self, active: &AdaptationPolicy) -> Result<AdaptationPolicy> {
        match &self.policy {
            None => Ok(active.clone()),
            Some(v) => AdaptationPolicy::from_json(v).map_err(|e| match e {
                Error::Validation(v) => Error::Validation(v.within("policy")),
                other => other,
            }),
        }
    }

    /// Number of training points for a dataset of `len` points.
    pub fn split_index(&self, len: usize) -> usize {
        (self.split_fraction * len as f64).floor() as usize
    }

    /// Checks the configuration against a dataset of `len` points.
    pub fn validate(&self, len: usize) -> Result<(), ValidationError> {
        if self.dataset_id.trim().is_empty() {
            return Err(ValidationError::new("dataset_id", "must not be empty"));
        }
        validate_goals(&self.goals)?;
        if self.window_w < 1 {
            return Err(ValidationError::new("window_w", "must be >= 1"));
        }
        if self.retrain_r < MIN_FIT_SAMPLES {
            return Err(ValidationError::new("retrain_r", format!("must be >= {MIN_FIT_SAMPLES}")));
        }
        if !(self.reuse_max_distance.is_finite() && self.reuse_max_distance >= 0.0) {
            return Err(ValidationError::new("reuse_max_distance", "must be a finite value >= 0"));
        }
        self.energy.validate().map_err(|e| e.within("energy"))?;
        if !(self.fit.ridge_lambda.is_finite() && self.fit.ridge_lambda >= 0.0) {
            return Err(ValidationError::new("fit.ridge_lambda", "must be a finite value >= 0"));
        }
        if !(self.fit.mlp_learning_rate.is_finite() && self.fit.mlp_learning_rate > 0.0) {
            return Err(ValidationError::new("fit.mlp_learning_rate", "must be a finite value > 0"));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(ValidationError::new("split_fraction", "must be in (0, 1)"));
        }
        let split = self.split_index(len);
        if split < MIN_FIT_SAMPLES + LAGS {
            return Err(ValidationError::new(
                "split_fraction",
                format!("training split has {split} points, need at least {}", MIN_FIT_SAMPLES + LAGS),
            ));
        }
        if len - split < LAGS + 1 {
            return Err(ValidationError::new(
                "split_fraction",
                format!("evaluation split has {} points, need at least {}", len - split, LAGS + 1),
            ));
        }
        validate_drifts(&self.drift_specs, len - split)
    }
}

/// Aggregate metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub policy: String,
    /// NaN (`null` in JSON) when undefined, e.g. a run stopped after one inference.
    #[serde(deserialize_with = "nan_from_null")]
    pub r2: f64,
    pub mean_latency_ms: f64,
    pub total_energy_j: f64,
    pub n_adaptations: u64,
    pub n_retrains: u64,
    pub n_reuses: u64,
    pub n_inferences: u64,
    pub training_energy_j: f64,
}

fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undefined_r2_survives_json() {
        let s = RunSummary {
            policy: "harmone".into(),
            r2: f64::NAN,
            mean_latency_ms: 0.0,
            total_energy_j: 0.0,
            n_adaptations: 0,
            n_retrains: 0,
            n_reuses: 0,
            n_inferences: 1,
            training_energy_j: 0.0,
        };
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"r2\":null"));
        let back: RunSummary = serde_json::from_str(&text).unwrap();
        assert!(back.r2.is_nan());
    }

    #[test]
    fn minimal_json_takes_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"dataset_id": "synthetic"}"#).unwrap();
        assert_eq!(c, RunConfig::new("synthetic"));
        assert_eq!((c.window_w, c.retrain_r, c.reuse_max_distance), (50, 500, 0.5));
        assert!(c.validate(4032).is_ok());
    }

    #[test]
    fn validation_paths() {
        let mut c = RunConfig::new("x");
        c.energy.joules_per_unit = 0.0;
        assert_eq!(c.validate(1000).unwrap_err().field, "energy.joules_per_unit");

        let mut c = RunConfig::new("x");
        c.drift_specs = vec![DriftSpec { start_index: 10, end_index: 5, scale: 1.0, shift: 0.0 }];
        assert_eq!(c.validate(1000).unwrap_err().field, "drift_specs[0].end_index");

        let c = RunConfig::new("x");
        assert_eq!(c.validate(20).unwrap_err().field, "split_fraction");

        let mut c = RunConfig::new("x");
        c.policy = Some(serde_json::json!({"name": "p", "rules": [{"metric": "foo", "tactic": "retrain"}]}));
        match c.resolve_policy(&AdaptationPolicy::harmone()) {
            Err(Error::Validation(e)) => assert_eq!(e.field, "policy.rules[0].metric"),
            other => panic!("{other:?}"),
        }
    }
}
