use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceEvent {
    MetricSample,
    Send,
    Deliver,
    Drop,
    Transition,
    Ignore,
    Link,
    Directive,
    UeService,
    SplitCheck,
    CellState,
}

/// One line of the event trace. Every field is always present (null when
/// not applicable) so traces diff cleanly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time_s: f64,
    pub event: TraceEvent,
    pub element: Option<String>,
    pub procedure: Option<String>,
    pub state_from: Option<String>,
    pub state_to: Option<String>,
    pub message_kind: Option<String>,
    pub detail: Option<String>,
}

impl TraceRecord {
    pub fn new(time_s: f64, event: TraceEvent, element: Option<&str>) -> Self {
        TraceRecord {
            time_s,
            event,
            element: element.map(str::to_string),
            procedure: None,
            state_from: None,
            state_to: None,
            message_kind: None,
            detail: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceLog {
    pub records: Vec<TraceRecord>,
}

impl TraceLog {
    pub fn push(&mut self, r: TraceRecord) {
        self.records.push(r);
    }

    pub fn last_sample_time(&self) -> Option<f64> {
        self.records.iter().rev().find(|r| r.event == TraceEvent::MetricSample).map(|r| r.time_s)
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> io::Result<TraceLog> {
        let mut records = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?);
        }
        Ok(TraceLog { records })
    }

    /// Records whose element is `id`.
    pub fn for_element<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a TraceRecord> + 'a {
        self.records.iter().filter(move |r| r.element.as_deref() == Some(id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip_keeps_nulls() {
        let mut log = TraceLog::default();
        log.push(TraceRecord::new(0.5, TraceEvent::MetricSample, None));
        let text = log.to_jsonl();
        assert!(text.contains("\"element\":null"));
        assert_eq!(TraceLog::read_jsonl(text.as_bytes()).unwrap(), log);
    }
}
