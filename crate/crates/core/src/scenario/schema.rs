//! On-disk scenario description. Field names carry their SI unit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::mobility::{MobilityTrace, Position, TraceMode, Waypoint};
use crate::radio::{PathLossModel, RadioParams, DEFAULT_MAX_SPECTRAL_EFFICIENCY};
use crate::splits::SplitTable;
use crate::topology::{AttachMode, ElementKind, LinkRole};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDescription {
    pub metadata: Metadata,
    #[serde(default)]
    pub timing: TimingConfig,
    pub radio: RadioSection,
    /// Per-option overrides merged over the default split table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<SplitTable>,
    pub networks: Vec<NetworkSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub elements: Vec<ElementSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<LinkSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<TraceSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mobile_cells: Vec<MobileCellSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ues: Vec<UeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub faults: Vec<FaultSpec>,
}

impl ScenarioDescription {
    /// Default split table with this scenario's overrides applied.
    pub fn split_table(&self) -> SplitTable {
        match &self.splits {
            Some(o) => SplitTable::with_overrides(o),
            None => SplitTable::default(),
        }
    }

    pub fn home_network(&self) -> Option<&str> {
        self.networks.iter().find(|n| n.home).map(|n| n.id.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub end_time_s: f64,
    /// Cadence of mobility evaluation and metric sampling.
    #[serde(default = "one_second")]
    pub sample_period_s: f64,
}

fn one_second() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProcessingDelays {
    pub core_control_s: f64,
    pub upf_s: f64,
    pub cu_s: f64,
    pub du_s: f64,
    pub ru_s: f64,
    pub monolithic_gnb_s: f64,
    pub mt_s: f64,
    pub ue_s: f64,
}

impl Default for ProcessingDelays {
    fn default() -> Self {
        ProcessingDelays {
            core_control_s: 500e-6,
            upf_s: 50e-6,
            cu_s: 200e-6,
            du_s: 100e-6,
            ru_s: 20e-6,
            monolithic_gnb_s: 200e-6,
            mt_s: 100e-6,
            ue_s: 100e-6,
        }
    }
}

impl ProcessingDelays {
    pub fn for_kind(&self, kind: ElementKind) -> f64 {
        match kind {
            ElementKind::CoreControl => self.core_control_s,
            ElementKind::Upf => self.upf_s,
            ElementKind::Cu => self.cu_s,
            ElementKind::Du => self.du_s,
            ElementKind::Ru => self.ru_s,
            ElementKind::MonolithicGnb => self.monolithic_gnb_s,
            ElementKind::Mt => self.mt_s,
            ElementKind::Ue => self.ue_s,
        }
    }

    pub fn all(&self) -> [(&'static str, f64); 8] {
        [
            ("core_control_s", self.core_control_s),
            ("upf_s", self.upf_s),
            ("cu_s", self.cu_s),
            ("du_s", self.du_s),
            ("ru_s", self.ru_s),
            ("monolithic_gnb_s", self.monolithic_gnb_s),
            ("mt_s", self.mt_s),
            ("ue_s", self.ue_s),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingConfig {
    pub procedure_timeout_s: f64,
    pub max_retries: u32,
    /// Extra delivery delay drawn uniformly from `[0, jitter_fraction * latency]`.
    pub jitter_fraction: f64,
    /// Packet size used when checking split latency budgets.
    pub reference_packet_bytes: u32,
    pub onboard_bus_latency_s: f64,
    pub onboard_bus_capacity_bps: f64,
    pub processing_delay: ProcessingDelays,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            procedure_timeout_s: 0.1,
            max_retries: 3,
            jitter_fraction: 0.0,
            reference_packet_bytes: 1500,
            onboard_bus_latency_s: 1e-6,
            onboard_bus_capacity_bps: 10e9,
            processing_delay: ProcessingDelays::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioSection {
    pub path_loss: PathLossModel,
    #[serde(default = "default_max_se")]
    pub max_spectral_efficiency: f64,
    pub profiles: BTreeMap<String, RadioParams>,
}

fn default_max_se() -> f64 {
    DEFAULT_MAX_SPECTRAL_EFFICIENCY
}

/// Field-by-field replacement of a radio profile.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RadioOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_power_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_antenna_gain_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_antenna_gain_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_figure_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hysteresis_db: Option<f64>,
}

impl RadioOverride {
    pub fn apply(&self, base: &RadioParams) -> RadioParams {
        RadioParams {
            tx_power_dbm: self.tx_power_dbm.unwrap_or(base.tx_power_dbm),
            tx_antenna_gain_db: self.tx_antenna_gain_db.unwrap_or(base.tx_antenna_gain_db),
            rx_antenna_gain_db: self.rx_antenna_gain_db.unwrap_or(base.rx_antenna_gain_db),
            bandwidth_hz: self.bandwidth_hz.unwrap_or(base.bandwidth_hz),
            noise_figure_db: self.noise_figure_db.unwrap_or(base.noise_figure_db),
            carrier_band_label: base.carrier_band_label.clone(),
            sensitivity_dbm: self.sensitivity_dbm.unwrap_or(base.sensitivity_dbm),
            hysteresis_db: self.hysteresis_db.unwrap_or(base.hysteresis_db),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub home: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementSpec {
    pub id: String,
    pub kind: ElementKind,
    pub network: String,
    pub position_m: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radio_profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radio_override: Option<RadioOverride>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub iab_donor: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediumKind {
    Wired,
    Radio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub id: String,
    pub endpoints: [String; 2],
    pub role: LinkRole,
    pub medium: MediumKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_way_latency_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_bps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NomadicSpec {
    pub position_m: [f64; 2],
    #[serde(default)]
    pub deploy_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSpec {
    pub id: String,
    /// `[time_s, x_m, y_m]` triples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waypoints: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nomadic: Option<NomadicSpec>,
    #[serde(default, rename = "loop", skip_serializing_if = "std::ops::Not::not")]
    pub looped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pl0_db_override: Option<f64>,
}

impl TraceSpec {
    /// Converts to a trace without validating waypoint times.
    pub fn to_trace(&self) -> Result<MobilityTrace, String> {
        let mode = match (&self.waypoints, &self.nomadic) {
            (Some(w), None) => TraceMode::Waypoints(
                w.iter().map(|p| Waypoint { time_s: p[0], position: Position::new(p[1], p[2]) }).collect(),
            ),
            (None, Some(n)) => TraceMode::Nomadic { position: n.position_m.into(), deploy_time_s: n.deploy_time_s },
            _ => return Err(format!("trace `{}` needs exactly one of waypoints or nomadic", self.id)),
        };
        Ok(MobilityTrace {
            trace_id: self.id.clone(),
            mode,
            looped: self.looped,
            pl0_db_override: self.pl0_db_override,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchKind {
    NoSplit,
    Split2,
    IabMbsr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttachSpec {
    pub target: String,
    pub mode: AttachMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobileCellSpec {
    pub id: String,
    pub arch: ArchKind,
    /// CU in the home network (split-2) or the IAB-donor-CU.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cu: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub bap_capable: bool,
    pub trace: String,
    pub attach: AttachSpec,
    pub access_radio_profile: String,
    pub mt_radio_profile: String,
    #[serde(default = "default_user_rate")]
    pub user_rate_bps: f64,
}

fn default_user_rate() -> f64 {
    50e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeSpec {
    pub id: String,
    /// Defaults to the home network.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_m: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
    pub radio_profile: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x0_m: f64,
    pub y0_m: f64,
    pub x1_m: f64,
    pub y1_m: f64,
    pub resolution_m: f64,
    /// Receiver assumed at every grid point.
    pub rx_profile: String,
    /// Coverage cadence; defaults to every metric sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_period_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultAction {
    LinkDown,
    LinkUp,
    McDeploy,
    McRetract,
    MtSessionFail,
}

impl FaultAction {
    pub fn as_str(self) -> &'static str {
        match self {
            FaultAction::LinkDown => "link_down",
            FaultAction::LinkUp => "link_up",
            FaultAction::McDeploy => "mc_deploy",
            FaultAction::McRetract => "mc_retract",
            FaultAction::MtSessionFail => "mt_session_fail",
        }
    }

    pub fn targets_link(self) -> bool {
        matches!(self, FaultAction::LinkDown | FaultAction::LinkUp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub time_s: f64,
    pub action: FaultAction,
    pub target: String,
}
