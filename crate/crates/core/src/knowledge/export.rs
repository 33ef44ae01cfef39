//! CSV export of the system logs, and the matching parsers.
//!
//! Reals use Rust's shortest round-trip formatting and absent values are empty
//! fields, so `parse(export(x)) == x` exactly.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::types::{AdaptationEvent, TelemetryRecord};
use crate::error::{Error, Result};

pub const TELEMETRY_HEADER: &str =
    "seq,timestamp,model_id,prediction,actual,abs_error,latency_ms,energy_j,cumulative_energy_j";
pub const ADAPTATIONS_HEADER: &str =
    "seq,timestamp,goal,metric_value,threshold,tactic,model_before,model_after,version_used,outcome";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogKind {
    Telemetry,
    Adaptations,
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn telemetry_csv(records: &[TelemetryRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TELEMETRY_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.seq,
            r.timestamp,
            r.model_id,
            r.prediction,
            opt(r.actual),
            opt(r.abs_error),
            r.latency_ms,
            r.energy_j,
            r.cumulative_energy_j
        );
    }
    out
}

pub fn adaptations_csv(events: &[AdaptationEvent]) -> String {
    let mut out = String::with_capacity(80 * (events.len() + 1));
    out.push_str(ADAPTATIONS_HEADER);
    out.push('\n');
    for e in events {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            e.seq,
            e.timestamp,
            e.goal,
            e.metric_value,
            e.threshold,
            e.tactic,
            e.model_before,
            e.model_after,
            opt(e.version_used),
            e.outcome.as_str()
        );
    }
    out
}

fn rows<'a>(text: &'a str, header: &str, width: usize) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.split('\n').enumerate();
    match lines.next() {
        Some((_, h)) if h == header => {}
        _ => return Err(Error::Dataset { line: 1, message: "unexpected header".into() }),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let fields: Vec<&str> = l.split(',').collect();
            if fields.len() == width {
                Ok((i + 1, fields))
            } else {
                Err(Error::Dataset {
                    line: i + 1,
                    message: format!("expected {width} fields, found {}", fields.len()),
                })
            }
        })
        .collect()
}

fn field<T: FromStr>(line: usize, name: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Dataset { line, message: format!("bad {name} `{raw}`") })
}

fn opt_field<T: FromStr>(line: usize, name: &str, raw: &str) -> Result<Option<T>> {
    if raw.is_empty() {
        Ok(None)
    } else {
        field(line, name, raw).map(Some)
    }
}

pub fn parse_telemetry_csv(text: &str) -> Result<Vec<TelemetryRecord>> {
    rows(text, TELEMETRY_HEADER, 9)?
        .into_iter()
        .map(|(line, f)| {
            Ok(TelemetryRecord {
                seq: field(line, "seq", f[0])?,
                timestamp: f[1].to_string(),
                model_id: field(line, "model_id", f[2])?,
                prediction: field(line, "prediction", f[3])?,
                actual: opt_field(line, "actual", f[4])?,
                abs_error: opt_field(line, "abs_error", f[5])?,
                latency_ms: field(line, "latency_ms", f[6])?,
                energy_j: field(line, "energy_j", f[7])?,
                cumulative_energy_j: field(line, "cumulative_energy_j", f[8])?,
            })
        })
        .collect()
}

pub fn parse_adaptations_csv(text: &str) -> Result<Vec<AdaptationEvent>> {
    rows(text, ADAPTATIONS_HEADER, 10)?
        .into_iter()
        .map(|(line, f)| {
            Ok(AdaptationEvent {
                seq: field(line, "seq", f[0])?,
                timestamp: f[1].to_string(),
                goal: f[2].to_string(),
                metric_value: field(line, "metric_value", f[3])?,
                threshold: field(line, "threshold", f[4])?,
                tactic: field(line, "tactic", f[5])?,
                model_before: field(line, "model_before", f[6])?,
                model_after: field(line, "model_after", f[7])?,
                version_used: opt_field(line, "version_used", f[8])?,
                outcome: field(line, "outcome", f[9])?,
                note: None,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::{KnowledgeStore, Outcome, TacticKind};
    use crate::spectrum::ModelId;
    use proptest::prelude::*;

    #[test]
    fn empty_logs_export_the_header() {
        let s = KnowledgeStore::new();
        assert_eq!(s.export_csv(LogKind::Telemetry), format!("{TELEMETRY_HEADER}\n"));
        assert_eq!(s.export_csv(LogKind::Adaptations), format!("{ADAPTATIONS_HEADER}\n"));
    }

    #[test]
    fn one_record_in_column_order() {
        let r = TelemetryRecord {
            seq: 0,
            timestamp: "2024-01-01T00:25:00".into(),
            model_id: ModelId::Ridge2,
            prediction: 41.5,
            actual: None,
            abs_error: None,
            latency_ms: 0.042,
            energy_j: 2.1,
            cumulative_energy_j: 2.1,
        };
        let csv = telemetry_csv(&[r]);
        assert_eq!(
            csv,
            format!("{TELEMETRY_HEADER}\n0,2024-01-01T00:25:00,ridge2,41.5,,,0.042,2.1,2.1\n")
        );
        assert_eq!(csv, telemetry_csv(&parse_telemetry_csv(&csv).unwrap()));
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![proptest::num::f64::NORMAL, Just(0.0), 1e-300f64..1e300]
    }

    fn model() -> impl Strategy<Value = ModelId> {
        prop_oneof![Just(ModelId::Lin), Just(ModelId::Ridge2), Just(ModelId::Mlp)]
    }

    proptest! {
        #[test]
        fn telemetry_round_trips(
            rows in proptest::collection::vec(
                (model(), finite(), proptest::option::of(finite()), finite(), finite(), finite(), "[0-9T:-]{0,19}"),
                0..20,
            )
        ) {
            let records: Vec<TelemetryRecord> = rows
                .into_iter()
                .enumerate()
                .map(|(i, (model_id, prediction, actual, latency_ms, energy_j, cum, ts))| TelemetryRecord {
                    seq: i as u64,
                    timestamp: ts,
                    model_id,
                    prediction,
                    actual,
                    abs_error: actual.map(|a| (prediction - a).abs()),
                    latency_ms,
                    energy_j,
                    cumulative_energy_j: cum,
                })
                .collect();
            let back = parse_telemetry_csv(&telemetry_csv(&records)).unwrap();
            prop_assert_eq!(back.len(), records.len());
            for (a, b) in back.iter().zip(&records) {
                prop_assert_eq!(a.prediction.to_bits(), b.prediction.to_bits());
                prop_assert_eq!(a.actual.map(f64::to_bits), b.actual.map(f64::to_bits));
                prop_assert_eq!(a.abs_error.map(f64::to_bits), b.abs_error.map(f64::to_bits));
                prop_assert_eq!(a.cumulative_energy_j.to_bits(), b.cumulative_energy_j.to_bits());
            }
            prop_assert_eq!(back, records);
        }

        #[test]
        fn adaptations_round_trip(
            rows in proptest::collection::vec(
                (0u64..10_000, finite(), finite(), model(), model(), proptest::option::of(1u64..50)),
                0..10,
            )
        ) {
            let events: Vec<AdaptationEvent> = rows
                .into_iter()
                .map(|(seq, metric_value, threshold, before, after, version_used)| AdaptationEvent {
                    seq,
                    timestamp: "2024-01-02T10:00:00".into(),
                    goal: "rolling_mae".into(),
                    metric_value,
                    threshold,
                    tactic: TacticKind::SwitchUp,
                    model_before: before,
                    model_after: after,
                    version_used,
                    outcome: Outcome::Applied,
                    note: None,
                })
                .collect();
            prop_assert_eq!(parse_adaptations_csv(&adaptations_csv(&events)).unwrap(), events);
        }
    }
}
