//! The managed system: replay, inference, metering and retraining.

mod dataset;

use std::sync::Arc;
use std::time::Instant;

pub use dataset::*;

use crate::energy::{inference_latency_ms, measure_inference, EnergyConfig};
use crate::error::{Error, Result};
use crate::knowledge::{KnowledgeStore, ModelVersion, TelemetryRecord};
use crate::spectrum::{descriptor, fit, FitParams, FittedModel, ModelId, WindowSample};

#[derive(Debug, Clone)]
pub struct DeployedModel {
    pub model: FittedModel,
    pub deployed_at_seq: u64,
}

/// Replays samples through the deployed model and writes telemetry.
///
/// Ground truth for record `j` is sample `j`'s target, but it is only written
/// when the next step runs (or at [`ManagedPipeline::finish`]), mirroring a
/// stream where the true value arrives one tick after the forecast.
#[derive(Debug)]
pub struct ManagedPipeline {
    store: Arc<KnowledgeStore>,
    energy: EnergyConfig,
    fit_params: FitParams,
    seed: u64,
    deployed: Option<DeployedModel>,
    pending_truth: Option<(u64, f64)>,
    /// Training energy not yet folded into a telemetry record.
    unbilled_training_j: f64,
    cumulative_energy_j: f64,
    next_seq: u64,
}

impl ManagedPipeline {
    pub fn new(store: Arc<KnowledgeStore>, energy: EnergyConfig, fit_params: FitParams, seed: u64) -> Self {
        let next_seq = store.telemetry_len();
        Self {
            store,
            energy,
            fit_params,
            seed,
            deployed: None,
            pending_truth: None,
            unbilled_training_j: 0.0,
            cumulative_energy_j: 0.0,
            next_seq,
        }
    }

    pub fn store(&self) -> &Arc<KnowledgeStore> {
        &self.store
    }

    pub fn deployed(&self) -> Option<&DeployedModel> {
        self.deployed.as_ref()
    }

    pub fn deployed_model_id(&self) -> Option<ModelId> {
        self.deployed.as_ref().map(|d| d.model.model_id)
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// Records whose ground truth has been written.
    pub fn completed(&self) -> u64 {
        self.next_seq - u64::from(self.pending_truth.is_some())
    }

    pub fn cumulative_energy_j(&self) -> f64 {
        self.cumulative_energy_j + self.unbilled_training_j
    }

    pub fn step(&mut self, sample: &WindowSample, timestamp: &str) -> Result<TelemetryRecord> {
        let deployed = self.deployed.as_ref().ok_or(Error::NoDeployedModel)?;
        let started = Instant::now();
        let prediction = deployed.model.predict(&sample.lags)?;
        let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
        if !sample.target.is_finite() {
            return Err(Error::InvalidInput("target must be finite".into()));
        }

        if let Some((seq, actual)) = self.pending_truth.take() {
            self.store.backfill(seq, actual)?;
        }

        let desc = descriptor(deployed.model.model_id);
        let energy_j = measure_inference(&desc, &self.energy, elapsed_ms);
        self.cumulative_energy_j += energy_j + self.unbilled_training_j;
        self.unbilled_training_j = 0.0;
        let record = TelemetryRecord {
            seq: self.next_seq,
            timestamp: timestamp.to_string(),
            model_id: deployed.model.model_id,
            prediction,
            actual: None,
            abs_error: None,
            latency_ms: inference_latency_ms(&desc, &self.energy, elapsed_ms),
            energy_j,
            cumulative_energy_j: self.cumulative_energy_j,
        };
        self.store.append_telemetry(record.clone())?;
        self.pending_truth = Some((record.seq, sample.target));
        self.next_seq += 1;
        Ok(record)
    }

    /// Writes the last outstanding ground truth.
    pub fn finish(&mut self) -> Result<()> {
        if let Some((seq, actual)) = self.pending_truth.take() {
            self.store.backfill(seq, actual)?;
        }
        Ok(())
    }

    /// Deploys `version` and returns the previously deployed version id.
    pub fn swap_model(&mut self, version: &ModelVersion) -> Result<Option<u64>> {
        let previous = self.deployed.as_ref().map(|d| d.model.version_id);
        if previous == Some(version.version_id) {
            return Ok(previous);
        }
        let model = FittedModel::from_version(version)?;
        self.store.set_deployed(model.model_id, model.version_id);
        self.deployed = Some(DeployedModel { model, deployed_at_seq: self.next_seq });
        Ok(previous)
    }

    /// Trains a new version of `model_id`, stores it and bills its training
    /// energy to the next telemetry record.
    pub fn retrain(&mut self, model_id: ModelId, recent: &[WindowSample]) -> Result<Arc<ModelVersion>> {
        let v = self.train_unbilled(model_id, recent)?;
        self.unbilled_training_j += v.training_cost_j;
        Ok(v)
    }

    /// Trains and stores a version without billing it to the run, for warm-up.
    pub fn train_unbilled(&mut self, model_id: ModelId, samples: &[WindowSample]) -> Result<Arc<ModelVersion>> {
        let mut v = fit(model_id, samples, self.seed, &self.fit_params, &self.energy)?;
        v.trained_at_seq = self.next_seq;
        let id = self.store.store_version(v)?;
        self.store.version(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::{LogKind, ModelVersion};
    use crate::spectrum::weights::LinearWeights;
    use crate::spectrum::{DataSignature, Weights};

    fn persistence() -> ModelVersion {
        ModelVersion {
            version_id: 0,
            model_id: ModelId::Lin,
            trained_at_seq: 0,
            signature: DataSignature::from_values(&[0.0]).unwrap(),
            weights: Weights::Lin(LinearWeights { coef: [0.0, 0.0, 0.0, 0.0, 1.0], intercept: 0.0 }).encode(),
            training_cost_j: 0.0,
        }
    }

    fn pipeline(jpu: f64) -> ManagedPipeline {
        let store = Arc::new(KnowledgeStore::new());
        ManagedPipeline::new(store, EnergyConfig::cost_model(jpu), FitParams::default(), 0)
    }

    fn deploy_persistence(p: &mut ManagedPipeline) {
        let id = p.store().store_version(persistence()).unwrap();
        let v = p.store().version(id).unwrap();
        p.swap_model(&v).unwrap();
    }

    fn sample(lags: [f64; 5], target: f64) -> WindowSample {
        WindowSample { lags, target }
    }

    #[test]
    fn step_needs_a_model() {
        let mut p = pipeline(0.5);
        assert!(matches!(p.step(&sample([0.0; 5], 1.0), "t"), Err(Error::NoDeployedModel)));
    }

    #[test]
    fn step_predicts_and_meters() {
        let mut p = pipeline(0.5);
        deploy_persistence(&mut p);
        let r = p.step(&sample([1.0, 2.0, 3.0, 4.0, 42.0], 43.0), "t0").unwrap();
        assert_eq!((r.prediction, r.energy_j, r.actual), (42.0, 3.0, None));
    }

    #[test]
    fn scripted_three_step_replay() {
        // flows 10, 11, ..., 17: sample j has lags 10+j..14+j and target 15+j
        let flows: Vec<f64> = (10..18).map(f64::from).collect();
        let samples: Vec<WindowSample> = (0..3)
            .map(|j| sample(flows[j..j + 5].try_into().unwrap(), flows[j + 5]))
            .collect();
        let mut p = pipeline(1.0);
        deploy_persistence(&mut p);

        p.step(&samples[0], "a").unwrap();
        assert_eq!(p.completed(), 0);
        p.step(&samples[1], "b").unwrap();
        let first = &p.store().read_telemetry(0, 1)[0];
        // prediction 14 (last lag), truth 15 (target of sample 0)
        assert_eq!((first.prediction, first.actual, first.abs_error), (14.0, Some(15.0), Some(1.0)));
        assert_eq!(p.store().read_telemetry(1, 1)[0].actual, None);
        p.step(&samples[2], "c").unwrap();
        p.finish().unwrap();
        let log = p.store().read_telemetry(0, 10);
        assert_eq!(log.iter().map(|r| r.actual.unwrap()).collect::<Vec<_>>(), [15.0, 16.0, 17.0]);
        assert_eq!(log.iter().map(|r| r.cumulative_energy_j).collect::<Vec<_>>(), [6.0, 12.0, 18.0]);
        assert_eq!(p.completed(), 3);
    }

    #[test]
    fn retrain_bills_the_next_record() {
        let mut p = pipeline(0.5);
        deploy_persistence(&mut p);
        let samples: Vec<WindowSample> = (0..100)
            .map(|i| {
                let x = f64::from(i);
                sample([x, x + 1.0, x + 2.0, x + 3.0, x + 4.0], x + 5.0)
            })
            .collect();
        p.step(&samples[0], "a").unwrap();
        let v = p.retrain(ModelId::Lin, &samples).unwrap();
        assert_eq!(v.training_cost_j, 100.0 * 6.0 * 0.5);
        assert_eq!(v.version_id, 2);
        let prev = p.swap_model(&v).unwrap();
        assert_eq!(prev, Some(1));
        assert_eq!(p.swap_model(&v).unwrap(), Some(2));
        let r = p.step(&samples[1], "b").unwrap();
        assert_eq!(r.cumulative_energy_j, 3.0 + 300.0 + 3.0);

        let again = p.retrain(ModelId::Lin, &samples).unwrap();
        assert_eq!(again.weights, v.weights);
        assert_ne!(again.version_id, v.version_id);
        assert!(p.retrain(ModelId::Lin, &samples[..5]).is_err());
        assert_eq!(p.store().versions().len(), 3);
    }

    #[test]
    fn model_boundary_is_clean() {
        let mut p = pipeline(1.0);
        deploy_persistence(&mut p);
        let s = sample([1.0; 5], 1.0);
        for _ in 0..3 {
            p.step(&s, "t").unwrap();
        }
        let train: Vec<WindowSample> = (0..20).map(|i| sample([f64::from(i); 5], f64::from(i))).collect();
        let v = p.train_unbilled(ModelId::Ridge2, &train).unwrap();
        p.swap_model(&v).unwrap();
        for _ in 0..3 {
            p.step(&s, "t").unwrap();
        }
        let csv = p.store().export_csv(LogKind::Telemetry);
        let models: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
        assert_eq!(models, ["lin", "lin", "lin", "ridge2", "ridge2", "ridge2"]);
    }
}
