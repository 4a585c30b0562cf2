//! The trace CSV format: one row per slot, stable header, floats with nine
//! significant digits. Saturated slots keep the row but leave the time
//! fields empty and set the `saturated` flag.

use fogflow_core::{Decision, IterationRecord, RegionId, SplitConfig, Topology};

pub const TRACE_HEADER: &str =
    "slot,requests,processing_s,completion_s,decision,active_arrays,split,public_cost,noise_region,noise_mips,saturated";

/// Nine significant digits, scientific notation.
pub fn fmt_float(v: f64) -> String {
    format!("{:.8e}", v)
}

fn fmt_time(v: f64) -> String {
    if v.is_finite() {
        fmt_float(v)
    } else {
        String::new()
    }
}

fn fmt_decision(d: Decision) -> &'static str {
    match d {
        Decision::Activate => "activate",
        Decision::Deactivate => "deactivate",
        Decision::None => "none",
    }
}

fn fmt_split(active: &[RegionId], split: &SplitConfig) -> String {
    active
        .iter()
        .map(|r| format!("{r}:{}", fmt_float(split.fraction(r))))
        .collect::<Vec<_>>()
        .join("|")
}

pub fn record_row(r: &IterationRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.slot,
        r.requests,
        fmt_time(r.processing_s),
        fmt_time(r.completion_s),
        fmt_decision(r.decision),
        r.active_arrays.join("|"),
        fmt_split(&r.active_arrays, &r.split),
        fmt_float(r.public_cost),
        r.noise_region.clone().unwrap_or_default(),
        fmt_float(r.noise_mips),
        r.saturated,
    )
}

pub fn trace_csv(records: &[IterationRecord]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&record_row(r));
        out.push('\n');
    }
    out
}

/// The slice of a trace row the charts and summaries need.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub slot: usize,
    pub requests: u64,
    pub completion_s: Option<f64>,
    pub public_cost: f64,
    pub saturated: bool,
}

/// Parses a trace CSV produced by [`trace_csv`].
pub fn parse_trace(text: &str) -> Result<Vec<TraceRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == TRACE_HEADER => {}
        other => return Err(format!("unexpected trace header: {other:?}")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(format!("row {i}: expected 11 fields, got {}", fields.len()));
        }
        let parse_f = |s: &str| -> Result<Option<f64>, String> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|e| format!("row {i}: {e}"))
            }
        };
        rows.push(TraceRow {
            slot: fields[0].parse().map_err(|e| format!("row {i}: {e}"))?,
            requests: fields[1].parse().map_err(|e| format!("row {i}: {e}"))?,
            completion_s: parse_f(fields[3])?,
            public_cost: parse_f(fields[7])?.unwrap_or(0.0),
            saturated: fields[10] == "true",
        });
    }
    Ok(rows)
}

/// Requests effectively routed to public regions in one slot: requests times
/// the public share of the split. For the exact policy (no split recorded) a
/// slot counts fully when it paid anything.
pub fn public_requests(record: &IterationRecord, topology: &Topology) -> f64 {
    if record.split.fractions.is_empty() {
        return if record.public_cost > 0.0 {
            record.requests as f64
        } else {
            0.0
        };
    }
    let public_share: f64 = record
        .active_arrays
        .iter()
        .filter(|r| {
            topology
                .region(r)
                .map(|reg| reg.kind.is_public())
                .unwrap_or(false)
        })
        .map(|r| record.split.fraction(r))
        .fold(0.0, |acc, f| acc + f);
    record.requests as f64 * public_share
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn record() -> IterationRecord {
        let mut fractions = BTreeMap::new();
        fractions.insert("edge".to_string(), 0.75);
        fractions.insert("public".to_string(), 0.25);
        IterationRecord {
            slot: 3,
            requests: 42,
            processing_s: 1.5,
            completion_s: 1.62,
            decision: Decision::Activate,
            active_arrays: vec!["edge".into(), "public".into()],
            split: SplitConfig { fractions },
            public_cost: 2.0,
            noise_region: Some("central".into()),
            noise_mips: 117.25,
            saturated: false,
        }
    }

    #[test]
    fn row_round_trips_through_parse() {
        let csv = trace_csv(&[record()]);
        let rows = parse_trace(&csv).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].slot, 3);
        assert_eq!(rows[0].requests, 42);
        assert!((rows[0].completion_s.unwrap() - 1.62).abs() < 1e-9);
        assert!(!rows[0].saturated);
    }

    #[test]
    fn saturated_row_has_empty_times() {
        let mut r = record();
        r.processing_s = f64::INFINITY;
        r.completion_s = f64::INFINITY;
        r.saturated = true;
        let row = record_row(&r);
        assert!(row.contains(",,"));
        let rows = parse_trace(&trace_csv(&[r])).unwrap();
        assert_eq!(rows[0].completion_s, None);
        assert!(rows[0].saturated);
    }

    #[test]
    fn floats_have_nine_significant_digits() {
        assert_eq!(fmt_float(70.26192), "7.02619200e1");
        assert_eq!(fmt_float(0.25), "2.50000000e-1");
    }
}
