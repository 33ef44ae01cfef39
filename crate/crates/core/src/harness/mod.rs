//! Headless experiment runs, repetition averaging and scenario presets.

mod compare;
mod config;
mod metrics;
mod runner;
mod scenarios;
mod trace;

pub use compare::{compare, comparison_csv, ComparisonRow, COMPARISON_HEADER};
pub use config::{default_goals, RunConfig, RunSummary};
pub use metrics::compute_r2;
pub use runner::{run_on_store, run_scenario, run_scenario_detailed, summarize, RunHooks, RunOutput};
pub use scenarios::*;
pub use trace::{generate_trace, TraceParams, POINTS_PER_DAY};
