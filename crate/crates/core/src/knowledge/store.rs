use std::sync::Arc;

use parking_lot::RwLock;

use super::types::*;
use crate::error::{Error, Result, ValidationError};
use crate::spectrum::{signature_distance, DataSignature, ModelId, Weights};

/// Shared state of the managing system.
///
/// The run loop is the only writer of telemetry, events and versions; any
/// number of readers may poll concurrently and always see a prefix of the log.
/// Goals and the active policy are swapped as whole values.
#[derive(Debug)]
pub struct KnowledgeStore {
    goals: RwLock<Arc<Vec<SustainabilityGoal>>>,
    policy: RwLock<Arc<AdaptationPolicy>>,
    versions: RwLock<Vec<Arc<ModelVersion>>>,
    deployed: RwLock<Option<(ModelId, u64)>>,
    telemetry: RwLock<Vec<TelemetryRecord>>,
    events: RwLock<Vec<AdaptationEvent>>,
}

impl Default for KnowledgeStore {
    fn default() -> Self {
        Self::new()
    }
}

impl KnowledgeStore {
    pub fn new() -> Self {
        Self {
            goals: RwLock::new(Arc::new(Vec::new())),
            policy: RwLock::new(Arc::new(AdaptationPolicy::harmone())),
            versions: RwLock::new(Vec::new()),
            deployed: RwLock::new(None),
            telemetry: RwLock::new(Vec::new()),
            events: RwLock::new(Vec::new()),
        }
    }

    /// Clears logs, versions and the deployment ahead of a new run. Goals and
    /// the policy are kept.
    pub fn reset_run(&self) {
        self.versions.write().clear();
        *self.deployed.write() = None;
        self.telemetry.write().clear();
        self.events.write().clear();
    }

    pub fn append_telemetry(&self, record: TelemetryRecord) -> Result<u64> {
        let mut log = self.telemetry.write();
        let expected = log.len() as u64;
        if record.seq != expected {
            return Err(Error::Sequencing { expected, got: record.seq });
        }
        log.push(record);
        Ok(expected)
    }

    /// Fills in the ground truth of the most recent record.
    pub fn backfill(&self, seq: u64, actual: f64) -> Result<()> {
        let mut log = self.telemetry.write();
        let last = log.len().checked_sub(1);
        if last != Some(seq as usize) {
            return Err(Error::Backfill { seq, reason: "only the latest record may be back-filled" });
        }
        let rec = &mut log[seq as usize];
        if rec.actual.is_some() {
            return Err(Error::Backfill { seq, reason: "already back-filled" });
        }
        rec.actual = Some(actual);
        rec.abs_error = Some((rec.prediction - actual).abs());
        Ok(())
    }

    pub fn read_telemetry(&self, since_seq: u64, limit: usize) -> Vec<TelemetryRecord> {
        let log = self.telemetry.read();
        let start = (since_seq as usize).min(log.len());
        log[start..].iter().take(limit).cloned().collect()
    }

    pub fn telemetry_len(&self) -> u64 {
        self.telemetry.read().len() as u64
    }

    /// Records `[start, end)`; clamped to the log.
    pub fn telemetry_range(&self, start: u64, end: u64) -> Vec<TelemetryRecord> {
        let log = self.telemetry.read();
        let end = (end as usize).min(log.len());
        let start = (start as usize).min(end);
        log[start..end].to_vec()
    }

    pub fn append_event(&self, event: AdaptationEvent) {
        self.events.write().push(event);
    }

    /// Events whose seq is at or after `since_seq`.
    pub fn read_events(&self, since_seq: u64) -> Vec<AdaptationEvent> {
        self.events.read().iter().filter(|e| e.seq >= since_seq).cloned().collect()
    }

    pub fn put_goals(&self, goals: Vec<SustainabilityGoal>) -> Result<(), ValidationError> {
        validate_goals(&goals)?;
        *self.goals.write() = Arc::new(goals);
        Ok(())
    }

    pub fn goals(&self) -> Arc<Vec<SustainabilityGoal>> {
        self.goals.read().clone()
    }

    pub fn set_policy(&self, policy: AdaptationPolicy) {
        *self.policy.write() = Arc::new(policy);
    }

    pub fn policy(&self) -> Arc<AdaptationPolicy> {
        self.policy.read().clone()
    }

    /// Stores `v` under the next version id and returns that id.
    pub fn store_version(&self, mut v: ModelVersion) -> Result<u64> {
        let decoded = Weights::decode(&v.weights)?;
        if decoded.model_id() != v.model_id {
            return Err(Error::InvalidWeights(format!(
                "weights are for `{}`, version says `{}`",
                decoded.model_id(),
                v.model_id
            )));
        }
        let mut versions = self.versions.write();
        let id = versions.last().map_or(0, |l| l.version_id) + 1;
        v.version_id = id;
        versions.push(Arc::new(v));
        Ok(id)
    }

    pub fn version(&self, id: u64) -> Result<Arc<ModelVersion>> {
        let versions = self.versions.read();
        // ids are dense and start at 1
        id.checked_sub(1)
            .and_then(|i| versions.get(i as usize))
            .cloned()
            .ok_or(Error::UnknownVersion(id))
    }

    pub fn versions(&self) -> Vec<VersionInfo> {
        self.versions.read().iter().map(|v| VersionInfo::from(v.as_ref())).collect()
    }

    pub fn latest_version(&self, model_id: ModelId) -> Option<Arc<ModelVersion>> {
        self.versions.read().iter().rev().find(|v| v.model_id == model_id).cloned()
    }

    /// Closest stored version of `model_id` within `max_distance` of `sig`.
    /// Ties go to the most recent version.
    pub fn find_similar_version(
        &self,
        sig: &DataSignature,
        model_id: ModelId,
        max_distance: f64,
    ) -> Option<Arc<ModelVersion>> {
        self.find_similar_version_where(sig, model_id, max_distance, |_| true)
    }

    pub fn find_similar_version_where(
        &self,
        sig: &DataSignature,
        model_id: ModelId,
        max_distance: f64,
        keep: impl Fn(&ModelVersion) -> bool,
    ) -> Option<Arc<ModelVersion>> {
        let versions = self.versions.read();
        let mut best: Option<(f64, &Arc<ModelVersion>)> = None;
        for v in versions.iter().filter(|v| v.model_id == model_id && keep(v)) {
            let d = signature_distance(sig, &v.signature);
            if d > max_distance {
                continue;
            }
            // versions are in id order, so `<=` prefers the later one on ties
            if best.is_none_or(|(bd, _)| d <= bd) {
                best = Some((d, v));
            }
        }
        best.map(|(_, v)| v.clone())
    }

    pub fn set_deployed(&self, model_id: ModelId, version_id: u64) {
        *self.deployed.write() = Some((model_id, version_id));
    }

    pub fn deployed(&self) -> Option<(ModelId, u64)> {
        *self.deployed.read()
    }

    pub fn export_csv(&self, kind: super::export::LogKind) -> String {
        match kind {
            super::export::LogKind::Telemetry => super::export::telemetry_csv(&self.telemetry.read()),
            super::export::LogKind::Adaptations => super::export::adaptations_csv(&self.events.read()),
        }
    }
}
