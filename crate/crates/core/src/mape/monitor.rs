use serde::{Deserialize, Serialize};

use crate::knowledge::{Metric, TelemetryRecord};
use crate::spectrum::{signature, signature_distance, DataSignature, WindowSample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSnapshot {
    pub window_start_seq: u64,
    pub window_end_seq: u64,
    pub rolling_mae: f64,
    pub mean_latency_ms: f64,
    pub energy_per_inference_j: f64,
    pub drift_score: f64,
    pub current_signature: DataSignature,
}

impl MetricsSnapshot {
    pub fn value(&self, metric: Metric) -> f64 {
        match metric {
            Metric::RollingMae => self.rolling_mae,
            Metric::EnergyPerInferenceJ => self.energy_per_inference_j,
            Metric::LatencyMs => self.mean_latency_ms,
            Metric::DriftScore => self.drift_score,
        }
    }
}

/// Aggregates one analysis window. `inputs[i]` is the sample behind
/// `window[i]`. Returns `None` for an empty window or one with records still
/// awaiting ground truth.
pub fn monitor(
    window: &[TelemetryRecord],
    inputs: &[WindowSample],
    reference: &DataSignature,
) -> Option<MetricsSnapshot> {
    if window.is_empty() || window.len() != inputs.len() {
        return None;
    }
    let n = window.len() as f64;
    let mut abs_sum = 0.0;
    for r in window {
        abs_sum += r.abs_error?;
    }
    let current_signature = signature(inputs).ok()?;
    Some(MetricsSnapshot {
        window_start_seq: window[0].seq,
        window_end_seq: window[window.len() - 1].seq,
        rolling_mae: abs_sum / n,
        mean_latency_ms: window.iter().map(|r| r.latency_ms).sum::<f64>() / n,
        energy_per_inference_j: window.iter().map(|r| r.energy_j).sum::<f64>() / n,
        drift_score: signature_distance(&current_signature, reference),
        current_signature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::ModelId;

    fn rec(seq: u64, abs_error: f64, energy_j: f64) -> TelemetryRecord {
        TelemetryRecord {
            seq,
            timestamp: String::new(),
            model_id: ModelId::Lin,
            prediction: 0.0,
            actual: Some(abs_error),
            abs_error: Some(abs_error),
            latency_ms: 0.0,
            energy_j,
            cumulative_energy_j: 0.0,
        }
    }

    fn inputs(n: usize) -> Vec<WindowSample> {
        (0..n)
            .map(|i| WindowSample { lags: [i as f64, 1.0, 2.0, 3.0, 4.0], target: 0.0 })
            .collect()
    }

    #[test]
    fn examples() {
        let x = inputs(3);
        let reference = signature(&x).unwrap();
        let s = monitor(&[rec(0, 1.0, 2.0), rec(1, 2.0, 2.0), rec(2, 3.0, 2.0)], &x, &reference).unwrap();
        assert_eq!(s.rolling_mae, 2.0);
        assert_eq!(s.drift_score, 0.0);
        assert_eq!((s.window_start_seq, s.window_end_seq), (0, 2));

        let x = inputs(2);
        let s = monitor(&[rec(4, 0.0, 2.0), rec(5, 0.0, 4.0)], &x, &reference).unwrap();
        assert_eq!(s.energy_per_inference_j, 3.0);
    }

    #[test]
    fn incomplete_window_is_skipped() {
        let x = inputs(2);
        let mut r = rec(1, 0.0, 1.0);
        r.abs_error = None;
        assert!(monitor(&[rec(0, 0.0, 1.0), r], &x, &signature(&x).unwrap()).is_none());
    }
}
