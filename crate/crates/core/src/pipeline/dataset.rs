use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationError};
use crate::spectrum::{WindowSample, LAGS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimePoint {
    pub timestamp: String,
    pub flow: f64,
}

/// Scale-and-shift applied to evaluation indices `[start_index, end_index)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub start_index: usize,
    pub end_index: usize,
    pub scale: f64,
    pub shift: f64,
}

pub const DATASET_HEADER: &str = "timestamp,flow";

/// Parses a `timestamp,flow` CSV. Errors cite 1-based line numbers.
pub fn parse_dataset_csv(text: &str) -> Result<Vec<TimePoint>> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == DATASET_HEADER => {}
        Some((_, h)) => {
            return Err(Error::Dataset {
                line: 1,
                message: format!("expected header `{DATASET_HEADER}`, found `{}`", h.trim()),
            })
        }
        None => return Err(Error::Dataset { line: 1, message: "empty file".into() }),
    }
    let mut points = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let Some((ts, flow)) = raw.split_once(',') else {
            return Err(Error::Dataset { line, message: "expected 2 fields".into() });
        };
        if flow.contains(',') {
            return Err(Error::Dataset { line, message: "expected 2 fields".into() });
        }
        if ts.contains('"') {
            return Err(Error::Dataset { line, message: "quoted timestamps are not supported".into() });
        }
        let flow: f64 = flow
            .trim()
            .parse()
            .ok()
            .filter(|f: &f64| f.is_finite())
            .ok_or_else(|| Error::Dataset { line, message: format!("flow `{}` is not a finite number", flow.trim()) })?;
        points.push(TimePoint { timestamp: ts.trim().to_string(), flow });
    }
    if points.len() < LAGS + 1 {
        return Err(Error::InsufficientData { needed: LAGS + 1, got: points.len() });
    }
    Ok(points)
}

pub fn dataset_csv(points: &[TimePoint]) -> String {
    let mut out = String::with_capacity(32 * (points.len() + 1));
    out.push_str(DATASET_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(out, "{},{}", p.timestamp, p.flow);
    }
    out
}

/// Checks drift ranges against a stream of `len` points. Field paths are
/// rooted at `drift_specs`.
pub fn validate_drifts(drifts: &[DriftSpec], len: usize) -> Result<(), ValidationError> {
    for (i, d) in drifts.iter().enumerate() {
        let at = |f: &str, m: String| ValidationError::new(format!("drift_specs[{i}].{f}"), m);
        if d.end_index <= d.start_index {
            return Err(at("end_index", "must be greater than start_index".into()));
        }
        if d.end_index > len {
            return Err(at("end_index", format!("exceeds the stream length {len}")));
        }
        if !d.scale.is_finite() {
            return Err(at("scale", "must be finite".into()));
        }
        if !d.shift.is_finite() {
            return Err(at("shift", "must be finite".into()));
        }
        if let Some(j) = drifts[..i]
            .iter()
            .position(|o| o.start_index < d.end_index && d.start_index < o.end_index)
        {
            return Err(at("start_index", format!("overlaps drift_specs[{j}]")));
        }
    }
    Ok(())
}

/// Applies `flow -> scale * flow + shift` inside each drift range.
pub fn ingest(points: &[TimePoint], drifts: &[DriftSpec]) -> Result<Vec<TimePoint>> {
    validate_drifts(drifts, points.len()).map_err(|e| Error::Config(e.to_string()))?;
    let mut out = points.to_vec();
    for d in drifts {
        for p in &mut out[d.start_index..d.end_index] {
            p.flow = d.scale * p.flow + d.shift;
        }
    }
    Ok(out)
}

/// Sample `j` has lags `flows[j..j+5]` and target `flows[j+5]`.
pub fn make_windows(points: &[TimePoint]) -> Result<Vec<WindowSample>> {
    if points.len() < LAGS + 1 {
        return Err(Error::InsufficientData { needed: LAGS + 1, got: points.len() });
    }
    Ok(points
        .windows(LAGS + 1)
        .map(|w| WindowSample {
            lags: std::array::from_fn(|i| w[i].flow),
            target: w[LAGS].flow,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(flows: &[f64]) -> Vec<TimePoint> {
        flows
            .iter()
            .enumerate()
            .map(|(i, f)| TimePoint { timestamp: format!("t{i}"), flow: *f })
            .collect()
    }

    #[test]
    fn drift_transform() {
        let d = DriftSpec { start_index: 0, end_index: 1, scale: 1.2, shift: 50.0 };
        assert_eq!(ingest(&pts(&[100.0, 100.0]), &[d]).unwrap()[0].flow, 170.0);
        let id = DriftSpec { scale: 1.0, shift: 0.0, ..d };
        assert_eq!(ingest(&pts(&[3.0, 4.0]), &[id]).unwrap(), pts(&[3.0, 4.0]));
        assert_eq!(ingest(&pts(&[100.0, 100.0]), &[d]).unwrap()[1].flow, 100.0);
    }

    #[test]
    fn overlapping_drifts_are_rejected() {
        let a = DriftSpec { start_index: 0, end_index: 5, scale: 1.0, shift: 1.0 };
        let b = DriftSpec { start_index: 4, end_index: 8, scale: 1.0, shift: 1.0 };
        assert!(matches!(ingest(&pts(&[0.0; 10]), &[a, b]), Err(Error::Config(_))));
        let c = DriftSpec { start_index: 5, ..b };
        assert!(ingest(&pts(&[0.0; 10]), &[a, c]).is_ok());
    }

    #[test]
    fn windows() {
        let w = make_windows(&pts(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0])).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!((w[0].lags, w[0].target), ([1.0, 2.0, 3.0, 4.0, 5.0], 6.0));
        assert_eq!((w[1].lags, w[1].target), ([2.0, 3.0, 4.0, 5.0, 6.0], 7.0));
        assert_eq!(make_windows(&pts(&[0.0; 6])).unwrap().len(), 1);
        assert!(make_windows(&pts(&[0.0; 5])).is_err());
    }

    #[test]
    fn dataset_errors_cite_lines() {
        let mut csv = String::from("timestamp,flow\n");
        for i in 0..20 {
            let flow = if i == 15 { "abc".to_string() } else { i.to_string() };
            csv.push_str(&format!("2024-01-01T00:{i:02}:00,{flow}\n"));
        }
        match parse_dataset_csv(&csv) {
            Err(Error::Dataset { line, .. }) => assert_eq!(line, 17),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_dataset_csv("timestamp,flow\n"),
            Err(Error::InsufficientData { needed: 6, got: 0 })
        ));
        assert!(matches!(parse_dataset_csv("time,value\n1,2\n"), Err(Error::Dataset { line: 1, .. })));
    }

    #[test]
    fn dataset_round_trip() {
        let p = pts(&[1.5, 2.0, 3.25, 4.0, 5.0, 6.0]);
        assert_eq!(parse_dataset_csv(&dataset_csv(&p)).unwrap(), p);
    }

    proptest! {
        #[test]
        fn drift_touches_only_its_range(
            flows in proptest::collection::vec(-500.0f64..500.0, 10..60),
            a in 0usize..60, len in 1usize..20, scale in -3.0f64..3.0, shift in -100.0f64..100.0,
        ) {
            let n = flows.len();
            let start = a % n;
            let end = (start + len).min(n);
            let d = DriftSpec { start_index: start, end_index: end, scale, shift };
            let out = ingest(&pts(&flows), &[d]).unwrap();
            for (i, (o, f)) in out.iter().zip(&flows).enumerate() {
                if (start..end).contains(&i) {
                    prop_assert_eq!(o.flow, scale * f + shift);
                } else {
                    prop_assert_eq!(o.flow, *f);
                }
            }
        }
    }
}
