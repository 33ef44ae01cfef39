use std::path::Path;

use std::sync::Arc;

use super::config::RunConfig;
use super::runner::{run_scenario_detailed, RunOutput};
use super::trace::{generate_trace, TraceParams};
use crate::error::{Error, Result};
use crate::knowledge::KnowledgeStore;
use crate::pipeline::{parse_dataset_csv, DriftSpec, TimePoint};

pub const SYNTHETIC: &str = "synthetic";

/// Where the two drift chunks start, as fractions of the evaluation stream.
/// Onsets are snapped down to a window boundary; on the default trace they
/// land at 300 and 1150.
pub const DRIFT_ONSET_FRACTIONS: [f64; 2] = [0.19, 0.72];
pub const DRIFT_FRACTION: f64 = 0.15;
pub const DRIFT_SCALE: f64 = 1.3;
pub const DRIFT_SHIFT: f64 = 40.0;

/// Loads `synthetic[:days[:seed]]` or a `timestamp,flow` CSV file.
pub fn resolve_dataset(id: &str) -> Result<Vec<TimePoint>> {
    if let Some(rest) = id.strip_prefix(SYNTHETIC) {
        let mut p = TraceParams::default();
        let mut parts = rest.split(':').skip(1);
        if !rest.is_empty() && !rest.starts_with(':') {
            return Err(Error::Config(format!("unknown dataset `{id}`")));
        }
        if let Some(d) = parts.next() {
            p.days = d.parse().map_err(|_| Error::Config(format!("bad day count in `{id}`")))?;
        }
        if let Some(s) = parts.next() {
            p.seed = s.parse().map_err(|_| Error::Config(format!("bad seed in `{id}`")))?;
        }
        return Ok(generate_trace(&p));
    }
    let path = Path::new(id);
    parse_dataset_csv(&std::fs::read_to_string(path)?)
}

/// Two equal-length chunks covering `fraction` of the evaluation stream each.
pub fn drift_chunks(onsets: [usize; 2], eval_len: usize, fraction: f64, specs: [(f64, f64); 2]) -> Vec<DriftSpec> {
    let len = ((fraction * eval_len as f64).floor() as usize).max(1);
    onsets
        .iter()
        .zip(specs)
        .map(|(&start, (scale, shift))| DriftSpec { start_index: start, end_index: (start + len).min(eval_len), scale, shift })
        .collect()
}

/// Evaluation-stream length of `config` on a dataset of `len` points.
pub fn eval_len(config: &RunConfig, len: usize) -> usize {
    len - config.split_index(len)
}

/// Drift chunk onsets for an evaluation stream of `eval_len` records.
pub fn drift_onsets(eval_len: usize, window_w: usize) -> [usize; 2] {
    DRIFT_ONSET_FRACTIONS.map(|f| (f * eval_len as f64 / window_w as f64).floor() as usize * window_w)
}

/// Two identical scale-and-shift chunks injected into `dataset_id`, replayed
/// under harmone.
pub fn drift_scenario(dataset_id: &str, len: usize) -> RunConfig {
    let mut cfg = RunConfig::new(dataset_id).with_policy("harmone");
    // a retrain window of three analysis windows fits inside a drift chunk
    cfg.retrain_r = 3 * cfg.window_w;
    let n = eval_len(&cfg, len);
    cfg.drift_specs = drift_chunks(drift_onsets(n, cfg.window_w), n, DRIFT_FRACTION, [(DRIFT_SCALE, DRIFT_SHIFT); 2]);
    cfg
}

/// The acceptance scenario: [`drift_scenario`] on the default 14-day trace.
pub fn default_scenario() -> (RunConfig, Vec<TimePoint>) {
    let points = generate_trace(&TraceParams::default());
    (drift_scenario(SYNTHETIC, points.len()), points)
}

/// The default scenario with a second chunk that does not resemble the first.
pub fn dissimilar_scenario() -> (RunConfig, Vec<TimePoint>) {
    let (mut cfg, points) = default_scenario();
    let n = eval_len(&cfg, points.len());
    let onsets = drift_onsets(n, cfg.window_w);
    cfg.drift_specs = drift_chunks(onsets, n, DRIFT_FRACTION, [(DRIFT_SCALE, DRIFT_SHIFT), (0.6, -60.0)]);
    (cfg, points)
}

/// Runs a scenario whose two drift chunks are identical, so the second one
/// should be served by the version trained for the first.
pub fn recurrence_scenario(config: &RunConfig, points: &[TimePoint]) -> Result<(RunOutput, Arc<KnowledgeStore>)> {
    match config.drift_specs.as_slice() {
        [a, b] if a.scale == b.scale && a.shift == b.shift => run_scenario_detailed(config, points),
        _ => Err(Error::Config("recurrence needs exactly two drift chunks with identical scale and shift".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_ids() {
        assert_eq!(resolve_dataset("synthetic").unwrap().len(), 14 * 288);
        let two = resolve_dataset("synthetic:2:9").unwrap();
        assert_eq!(two.len(), 576);
        assert_eq!(two, generate_trace(&TraceParams { days: 2, seed: 9, ..TraceParams::default() }));
        assert!(resolve_dataset("synthetical").is_err());
        assert!(resolve_dataset("synthetic:x").is_err());
    }

    #[test]
    fn default_chunks() {
        let (cfg, points) = default_scenario();
        assert_eq!(eval_len(&cfg, points.len()), 1613);
        let d = &cfg.drift_specs;
        assert_eq!((d[0].start_index, d[0].end_index), (300, 541));
        assert_eq!((d[1].start_index, d[1].end_index), (1150, 1391));
        assert!(cfg.validate(points.len()).is_ok());
    }

    #[test]
    fn short_traces_get_chunks_that_fit() {
        let cfg = drift_scenario("x", 3 * 288);
        let n = eval_len(&cfg, 3 * 288);
        assert_eq!(n, 346);
        assert!(cfg.validate(3 * 288).is_ok());
        let d = &cfg.drift_specs;
        assert_eq!((d[0].start_index, d[1].start_index), (50, 200));
        assert!(d[1].end_index <= n);
    }
}
