//! Coverage, service continuity and per-run summaries.

mod bundle;
mod coverage;

use thiserror::Error;

use crate::engine::{TraceEvent, TraceLog};

pub use bundle::{
    CoverageSample, McSample, McSummary, MessageAccounting, MetricsBundle, UeQosRecord, UeServiceState, UeSummary,
};
pub use coverage::{coverage_fraction, coverage_map, CellCoverage, CoverageGrid, CoverageServer};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no service records for UE `{0}`")]
    UnknownUe(String),
}

/// Maximal `(start, end)` intervals during which `ue` was in outage. An
/// interval still open when the trace ends is closed at the last sample.
pub fn outage_intervals(trace: &TraceLog, ue: &str) -> Result<Vec<(f64, f64)>, MetricsError> {
    let end = trace.last_sample_time().unwrap_or(0.0);
    let mut seen = false;
    let mut open: Option<f64> = None;
    let mut out = Vec::new();
    for r in trace.records.iter().filter(|r| r.event == TraceEvent::UeService && r.element.as_deref() == Some(ue)) {
        seen = true;
        match (r.state_to.as_deref(), open) {
            (Some("Outage"), None) => open = Some(r.time_s),
            (Some("Connected"), Some(start)) => {
                if r.time_s > start {
                    out.push((start, r.time_s));
                }
                open = None;
            }
            _ => {}
        }
    }
    if !seen {
        return Err(MetricsError::UnknownUe(ue.to_string()));
    }
    if let Some(start) = open {
        if end > start {
            out.push((start, end));
        }
    }
    Ok(out)
}

/// `(outage, connected)` seconds over the span from the UE's first service
/// record to the last sample.
pub fn service_durations(trace: &TraceLog, ue: &str) -> Result<(f64, f64), MetricsError> {
    let first = trace
        .records
        .iter()
        .find(|r| r.event == TraceEvent::UeService && r.element.as_deref() == Some(ue))
        .map(|r| r.time_s)
        .ok_or_else(|| MetricsError::UnknownUe(ue.to_string()))?;
    let span = trace.last_sample_time().unwrap_or(first) - first;
    let outage: f64 = outage_intervals(trace, ue)?.iter().map(|(a, b)| b - a).sum();
    Ok((outage, span - outage))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::TraceRecord;

    fn service(t: f64, ue: &str, state: &str) -> TraceRecord {
        TraceRecord { state_to: Some(state.into()), ..TraceRecord::new(t, TraceEvent::UeService, Some(ue)) }
    }

    fn sample(t: f64) -> TraceRecord {
        TraceRecord::new(t, TraceEvent::MetricSample, None)
    }

    #[test]
    fn always_connected_has_no_outage() {
        let log = TraceLog { records: vec![service(0.0, "u", "Connected"), sample(0.0), sample(10.0)] };
        assert_eq!(outage_intervals(&log, "u").unwrap(), vec![]);
        assert_eq!(service_durations(&log, "u").unwrap(), (0.0, 10.0));
    }

    #[test]
    fn outage_window_and_open_tail() {
        let log = TraceLog {
            records: vec![
                service(0.0, "u", "Connected"),
                service(300.0, "u", "Outage"),
                service(400.0, "u", "Connected"),
                service(500.0, "u", "Outage"),
                sample(600.0),
            ],
        };
        assert_eq!(outage_intervals(&log, "u").unwrap(), vec![(300.0, 400.0), (500.0, 600.0)]);
        let (o, c) = service_durations(&log, "u").unwrap();
        assert_eq!(o + c, 600.0);
        assert_eq!(o, 200.0);
    }

    #[test]
    fn unknown_ue() {
        let log = TraceLog { records: vec![sample(0.0)] };
        assert_eq!(outage_intervals(&log, "x"), Err(MetricsError::UnknownUe("x".into())));
    }
}
