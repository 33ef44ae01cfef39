use serde::{Deserialize, Serialize};

use super::WindowSample;
use crate::error::{Error, Result};

const EPS: f64 = 1e-6;

/// Statistical fingerprint of a set of lag values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataSignature {
    pub mean: f64,
    pub std: f64,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
    pub n: u64,
}

impl DataSignature {
    /// Signature over raw values: population std and nearest-rank quantiles.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            mean,
            std: var.sqrt(),
            p10: nearest_rank(&sorted, 0.10),
            p50: nearest_rank(&sorted, 0.50),
            p90: nearest_rank(&sorted, 0.90),
            n: values.len() as u64,
        })
    }
}

fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Signature over the flattened lag values of `samples`.
pub fn signature(samples: &[WindowSample]) -> Result<DataSignature> {
    let values: Vec<f64> = samples.iter().flat_map(|s| s.lags).collect();
    DataSignature::from_values(&values)
}

/// Distance used both as the drift score and for version reuse. `b` is the
/// reference: the mean gap is measured in units of `b.std`.
pub fn signature_distance(a: &DataSignature, b: &DataSignature) -> f64 {
    let mean_gap = (a.mean - b.mean).abs() / b.std.max(EPS);
    let spread_gap = ((a.std + EPS) / (b.std + EPS)).ln().abs();
    mean_gap.max(spread_gap)
}
