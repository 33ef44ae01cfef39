//! Joule-proxy energy meter.
//!
//! Inference and training energy are derived from per-model compute-cost units,
//! so a run's energy is a pure function of what it executed.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ValidationError};
use crate::spectrum::ModelDescriptor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyMode {
    CostModel,
    WallClockInformational,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyConfig {
    pub mode: EnergyMode,
    pub joules_per_unit: f64,
    /// Latency proxy used in cost-model mode, so telemetry stays byte-reproducible.
    #[serde(default = "default_ms_per_unit")]
    pub ms_per_unit: f64,
}

fn default_ms_per_unit() -> f64 {
    0.002
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            mode: EnergyMode::CostModel,
            joules_per_unit: 0.1,
            ms_per_unit: default_ms_per_unit(),
        }
    }
}

impl EnergyConfig {
    pub fn cost_model(joules_per_unit: f64) -> Self {
        Self {
            joules_per_unit,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(self.joules_per_unit.is_finite() && self.joules_per_unit > 0.0) {
            return Err(ValidationError::new(
                "joules_per_unit",
                "must be a finite value > 0",
            ));
        }
        if !(self.ms_per_unit.is_finite() && self.ms_per_unit >= 0.0) {
            return Err(ValidationError::new("ms_per_unit", "must be a finite value >= 0"));
        }
        Ok(())
    }
}

/// Joules for one inference. In wall-clock mode the elapsed time is turned into
/// pseudo-joules at `joules_per_unit` per microsecond; that mode is display-only.
pub fn measure_inference(descriptor: &ModelDescriptor, cfg: &EnergyConfig, elapsed_ms: f64) -> f64 {
    match cfg.mode {
        EnergyMode::CostModel => descriptor.inference_cost_units as f64 * cfg.joules_per_unit,
        EnergyMode::WallClockInformational => elapsed_ms * 1000.0 * cfg.joules_per_unit,
    }
}

/// Training cost: units per sample-epoch times samples times epochs.
pub fn measure_training(
    descriptor: &ModelDescriptor,
    n_samples: usize,
    epochs: usize,
    cfg: &EnergyConfig,
) -> Result<f64> {
    if n_samples == 0 || epochs == 0 {
        return Err(crate::Error::InvalidInput(
            "training energy needs at least one sample and one epoch".into(),
        ));
    }
    Ok(descriptor.training_cost_units_per_sample as f64
        * n_samples as f64
        * epochs as f64
        * cfg.joules_per_unit)
}

/// Latency reported for an inference: the cost-unit proxy in cost-model mode,
/// the measured wall-clock time otherwise.
pub fn inference_latency_ms(descriptor: &ModelDescriptor, cfg: &EnergyConfig, elapsed_ms: f64) -> f64 {
    match cfg.mode {
        EnergyMode::CostModel => descriptor.inference_cost_units as f64 * cfg.ms_per_unit,
        EnergyMode::WallClockInformational => elapsed_ms,
    }
}
