use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UeServiceState {
    Connected,
    Outage,
}

impl UeServiceState {
    pub fn as_str(self) -> &'static str {
        match self {
            UeServiceState::Connected => "Connected",
            UeServiceState::Outage => "Outage",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeQosRecord {
    pub ue_id: String,
    pub time_s: f64,
    pub serving_cell: Option<String>,
    /// One-way latency of a reference packet to the home UPF.
    pub e2e_latency_s: Option<f64>,
    /// Smallest capacity along the user-plane path; zero in outage.
    pub throughput_bps: f64,
    pub state: UeServiceState,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UeSummary {
    pub samples: Vec<UeQosRecord>,
    pub outage_intervals: Vec<(f64, f64)>,
    pub outage_total_s: f64,
    pub connected_total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSample {
    pub time_s: f64,
    pub on_air: bool,
    pub mt_state: String,
    pub f1_state: Option<String>,
    pub backhaul_latency_s: Option<f64>,
    pub backhaul_capacity_bps: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub arch: String,
    /// Transport check of the CU-DU split, for split architectures.
    pub split_verdict: Option<String>,
    pub first_on_air_s: Option<f64>,
    pub on_air_time_s: f64,
    pub samples: Vec<McSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageSample {
    pub time_s: f64,
    pub fraction: f64,
}

/// Control-message bookkeeping; `sent == delivered + dropped + pending`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageAccounting {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub pending: u64,
    pub drop_reasons: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsBundle {
    pub scenario: String,
    pub seed: u64,
    pub end_time_s: f64,
    pub coverage: Vec<CoverageSample>,
    pub ues: BTreeMap<String, UeSummary>,
    pub mobile_cells: BTreeMap<String, McSummary>,
    pub messages: MessageAccounting,
}

impl MetricsBundle {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }

    pub fn final_coverage(&self) -> Option<f64> {
        self.coverage.last().map(|c| c.fraction)
    }

    pub fn coverage_at(&self, t: f64) -> Option<f64> {
        self.coverage.iter().find(|c| c.time_s == t).map(|c| c.fraction)
    }

    /// Writes `coverage.csv`, `ue_<id>.csv` and `mc_<id>.csv` into `dir`.
    pub fn write_series(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("coverage.csv"))?;
        for c in &self.coverage {
            w.serialize(c)?;
        }
        w.flush()?;
        for (id, ue) in &self.ues {
            let mut w = csv::Writer::from_path(dir.join(format!("ue_{id}.csv")))?;
            w.write_record(["time_s", "state", "serving_cell", "e2e_latency_s", "throughput_bps"])?;
            for r in &ue.samples {
                w.write_record([
                    r.time_s.to_string(),
                    r.state.as_str().to_string(),
                    r.serving_cell.clone().unwrap_or_default(),
                    r.e2e_latency_s.map(|x| x.to_string()).unwrap_or_default(),
                    r.throughput_bps.to_string(),
                ])?;
            }
            w.flush()?;
        }
        for (id, mc) in &self.mobile_cells {
            let mut w = csv::Writer::from_path(dir.join(format!("mc_{id}.csv")))?;
            for s in &mc.samples {
                w.serialize(s)?;
            }
            w.flush()?;
        }
        Ok(())
    }
}
