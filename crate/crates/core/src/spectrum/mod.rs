//! The three-tier model spectrum: `lin` < `ridge2` < `mlp` in both accuracy and cost.

pub mod linear;
pub mod mlp;
pub mod signature;
pub mod weights;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::energy::{measure_training, EnergyConfig};
use crate::error::{Error, Result};
use crate::knowledge::ModelVersion;

pub use signature::{signature, signature_distance, DataSignature};
pub use weights::Weights;

/// Lag count of every window sample.
pub const LAGS: usize = 5;

/// Minimum number of samples accepted by [`fit`].
pub const MIN_FIT_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    Lin,
    Ridge2,
    Mlp,
}

impl ModelId {
    pub const ALL: [ModelId; 3] = [ModelId::Lin, ModelId::Ridge2, ModelId::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Lin => "lin",
            ModelId::Ridge2 => "ridge2",
            ModelId::Mlp => "mlp",
        }
    }

    pub fn tier(self) -> u8 {
        self as u8
    }

    pub fn from_tier(tier: u8) -> Option<Self> {
        Self::ALL.get(tier as usize).copied()
    }

    /// Next tier up, or `None` at the top.
    pub fn up(self) -> Option<Self> {
        Self::from_tier(self.tier() + 1)
    }

    /// Next tier down, or `None` at the bottom.
    pub fn down(self) -> Option<Self> {
        self.tier().checked_sub(1).and_then(Self::from_tier)
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lin" => Ok(ModelId::Lin),
            "ridge2" => Ok(ModelId::Ridge2),
            "mlp" => Ok(ModelId::Mlp),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub model_id: ModelId,
    pub tier: u8,
    pub inference_cost_units: u64,
    pub training_cost_units_per_sample: u64,
    /// Passes over the training set; 1 for the closed-form models.
    pub epochs: u64,
}

/// Hidden width of the `mlp` tier. Its cost constants assume this value.
pub const MLP_HIDDEN: usize = 32;
pub const MLP_EPOCHS: usize = 200;

pub fn descriptor(model_id: ModelId) -> ModelDescriptor {
    // Multiply-accumulate counts per forward pass.
    let (inference, training, epochs) = match model_id {
        ModelId::Lin => (6, 6, 1),
        ModelId::Ridge2 => (21, 21, 1),
        ModelId::Mlp => {
            let h = MLP_HIDDEN as u64;
            let forward = LAGS as u64 * h + h + (h + 1);
            // backward pass costs roughly twice the forward one
            (forward, 3 * forward, MLP_EPOCHS as u64)
        }
    };
    ModelDescriptor {
        model_id,
        tier: model_id.tier(),
        inference_cost_units: inference,
        training_cost_units_per_sample: training,
        epochs,
    }
}

pub fn spectrum() -> Vec<ModelDescriptor> {
    ModelId::ALL.into_iter().map(descriptor).collect()
}

/// Five consecutive readings and the reading that followed them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSample {
    pub lags: [f64; LAGS],
    pub target: f64,
}

impl WindowSample {
    pub fn is_finite(&self) -> bool {
        self.target.is_finite() && self.lags.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub ridge_lambda: f64,
    pub mlp_learning_rate: f64,
}

impl Default for FitParams {
    fn default() -> Self {
        Self {
            ridge_lambda: 1.0,
            mlp_learning_rate: 0.01,
        }
    }
}

/// Fits raw weights without touching the energy meter.
pub fn fit_weights(model_id: ModelId, samples: &[WindowSample], seed: u64, params: &FitParams) -> Result<Weights> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_SAMPLES,
            got: samples.len(),
        });
    }
    if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidInput(format!("training sample {i} is not finite")));
    }
    Ok(match model_id {
        ModelId::Lin => Weights::Lin(linear::fit_lin(samples)),
        ModelId::Ridge2 => Weights::Ridge2(linear::fit_ridge2(samples, params.ridge_lambda)),
        ModelId::Mlp => {
            let cfg = mlp::MlpConfig {
                hidden: MLP_HIDDEN,
                epochs: MLP_EPOCHS,
                learning_rate: params.mlp_learning_rate,
            };
            Weights::Mlp(mlp::fit_mlp(samples, seed, &cfg).weights)
        }
    })
}

/// Trains `model_id` on `samples`. The returned version has `version_id` 0
/// until the knowledge store assigns one.
pub fn fit(
    model_id: ModelId,
    samples: &[WindowSample],
    seed: u64,
    params: &FitParams,
    energy: &EnergyConfig,
) -> Result<ModelVersion> {
    let weights = fit_weights(model_id, samples, seed, params)?;
    let desc = descriptor(model_id);
    Ok(ModelVersion {
        version_id: 0,
        model_id,
        trained_at_seq: 0,
        signature: signature(samples)?,
        weights: weights.encode(),
        training_cost_j: measure_training(&desc, samples.len(), desc.epochs as usize, energy)?,
    })
}

impl Weights {
    pub fn predict(&self, lags: &[f64; LAGS]) -> f64 {
        match self {
            Weights::Lin(w) => linear::predict_lin(w, lags),
            Weights::Ridge2(w) => linear::predict_ridge2(w, lags),
            Weights::Mlp(w) => mlp::predict_mlp(w, lags),
        }
    }
}

/// A decoded version ready for repeated prediction.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub version_id: u64,
    pub model_id: ModelId,
    weights: Weights,
}

impl FittedModel {
    pub fn from_version(version: &ModelVersion) -> Result<Self> {
        let weights = Weights::decode(&version.weights)?;
        if weights.model_id() != version.model_id {
            return Err(Error::InvalidWeights(format!(
                "weights are for `{}`, version says `{}`",
                weights.model_id(),
                version.model_id
            )));
        }
        Ok(Self {
            version_id: version.version_id,
            model_id: version.model_id,
            weights,
        })
    }

    pub fn predict(&self, lags: &[f64; LAGS]) -> Result<f64> {
        if lags.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("lag values must be finite".into()));
        }
        Ok(self.weights.predict(lags))
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }
}

/// One-off prediction from a stored version.
pub fn predict(version: &ModelVersion, lags: &[f64; LAGS]) -> Result<f64> {
    FittedModel::from_version(version)?.predict(lags)
}
