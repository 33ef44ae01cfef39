use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, RunSummary};
use super::runner::run_scenario;
use crate::error::{Error, Result};
use crate::pipeline::TimePoint;

pub const COMPARISON_HEADER: &str = "policy,r2,mean_latency_ms,total_energy_j,n_adaptations";

/// Per-policy means over the repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub policy: String,
    pub r2: f64,
    pub mean_latency_ms: f64,
    pub total_energy_j: f64,
    pub n_adaptations: f64,
    pub runs: Vec<RunSummary>,
}

/// Runs each policy `reps` times with seeds `seed, seed + 1, ...` and averages.
pub fn compare(policies: &[String], base: &RunConfig, points: &[TimePoint], reps: usize) -> Result<Vec<ComparisonRow>> {
    if reps == 0 {
        return Err(Error::Config("reps must be >= 1".into()));
    }
    policies
        .iter()
        .map(|policy| {
            let runs = (0..reps)
                .map(|i| {
                    let mut cfg = base.clone().with_policy(policy);
                    cfg.seed = base.seed.wrapping_add(i as u64);
                    run_scenario(&cfg, points)
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::PolicyRun { policy: policy.clone(), source: Box::new(e) })?;
            let mean = |f: fn(&RunSummary) -> f64| runs.iter().map(f).sum::<f64>() / reps as f64;
            Ok(ComparisonRow {
                policy: policy.clone(),
                r2: mean(|s| s.r2),
                mean_latency_ms: mean(|s| s.mean_latency_ms),
                total_energy_j: mean(|s| s.total_energy_j),
                n_adaptations: mean(|s| s.n_adaptations as f64),
                runs,
            })
        })
        .collect()
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(COMPARISON_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.policy, r.r2, r.mean_latency_ms, r.total_energy_j, r.n_adaptations
        );
    }
    out
}
