//! Functional split options between CU, DU and RU, their layer placement and
//! the transport each split demands from the path between the halves.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplitError {
    #[error("unknown split option `{0}`")]
    UnknownOption(String),
    #[error("requirement table has no entry for split option {0}")]
    MissingTableEntry(SplitOption),
    #[error("invalid requirement for split option {option}: {reason}")]
    InvalidRequirement { option: SplitOption, reason: String },
}

/// Radio protocol stack, top to bottom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProtocolLayer {
    Rrc,
    Pdcp,
    HighRlc,
    LowRlc,
    HighMac,
    LowMac,
    HighPhy,
    LowPhy,
    Rf,
}

impl ProtocolLayer {
    pub const ALL: [ProtocolLayer; 9] = [
        ProtocolLayer::Rrc,
        ProtocolLayer::Pdcp,
        ProtocolLayer::HighRlc,
        ProtocolLayer::LowRlc,
        ProtocolLayer::HighMac,
        ProtocolLayer::LowMac,
        ProtocolLayer::HighPhy,
        ProtocolLayer::LowPhy,
        ProtocolLayer::Rf,
    ];
}

/// One of the eight split points, plus the co-located `NoSplit` pseudo-option.
///
/// Option 7 is only modeled as its 7.2 variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SplitOption {
    Option1,
    Option2,
    Option3,
    Option4,
    Option5,
    Option6,
    Option7_2,
    Option8,
    NoSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitLevel {
    /// CU/DU boundary.
    High,
    /// DU/RU boundary.
    Low,
    CoLocated,
}

impl SplitOption {
    pub const ALL: [SplitOption; 9] = [
        SplitOption::Option1,
        SplitOption::Option2,
        SplitOption::Option3,
        SplitOption::Option4,
        SplitOption::Option5,
        SplitOption::Option6,
        SplitOption::Option7_2,
        SplitOption::Option8,
        SplitOption::NoSplit,
    ];

    /// The HLS used by F1.
    pub const F1: SplitOption = SplitOption::Option2;
    /// The LLS standardized by eCPRI.
    pub const ECPRI: SplitOption = SplitOption::Option7_2;

    pub fn label(self) -> &'static str {
        match self {
            SplitOption::Option1 => "1",
            SplitOption::Option2 => "2",
            SplitOption::Option3 => "3",
            SplitOption::Option4 => "4",
            SplitOption::Option5 => "5",
            SplitOption::Option6 => "6",
            SplitOption::Option7_2 => "7.2",
            SplitOption::Option8 => "8",
            SplitOption::NoSplit => "none",
        }
    }

    /// Index of the first layer below the cut. Layers `[0, cut)` sit above it.
    fn cut_index(self) -> Option<usize> {
        match self {
            SplitOption::Option1 => Some(1),
            SplitOption::Option2 => Some(2),
            SplitOption::Option3 => Some(3),
            SplitOption::Option4 => Some(4),
            SplitOption::Option5 => Some(5),
            SplitOption::Option6 => Some(6),
            SplitOption::Option7_2 => Some(7),
            SplitOption::Option8 => Some(8),
            SplitOption::NoSplit => None,
        }
    }

    // Options 4-6 are not spelled out beyond the figure; this is the one
    // place their classification lives.
    pub fn level(self) -> SplitLevel {
        match self {
            SplitOption::Option1
            | SplitOption::Option2
            | SplitOption::Option3
            | SplitOption::Option4
            | SplitOption::Option5 => SplitLevel::High,
            SplitOption::Option6 | SplitOption::Option7_2 | SplitOption::Option8 => SplitLevel::Low,
            SplitOption::NoSplit => SplitLevel::CoLocated,
        }
    }
}

impl fmt::Display for SplitOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SplitOption {
    type Err = SplitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SplitOption::ALL.into_iter().find(|o| o.label() == s).ok_or_else(|| SplitError::UnknownOption(s.to_string()))
    }
}

impl Serialize for SplitOption {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for SplitOption {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerPlacement {
    pub cu: Vec<ProtocolLayer>,
    pub du: Vec<ProtocolLayer>,
    pub ru: Vec<ProtocolLayer>,
}

/// Layers hosted by CU, DU and RU when `opt` is in force.
///
/// A high-level option is paired with the eCPRI low-level split and a
/// low-level option with the F1 high-level split. `NoSplit` keeps the whole
/// stack in one unit, reported as the CU.
pub fn layer_placement(opt: SplitOption) -> LayerPlacement {
    let (hls, lls) = match opt.level() {
        SplitLevel::High => (opt, SplitOption::ECPRI),
        SplitLevel::Low => (SplitOption::F1, opt),
        SplitLevel::CoLocated => {
            return LayerPlacement { cu: ProtocolLayer::ALL.to_vec(), du: vec![], ru: vec![] };
        }
    };
    let hi = hls.cut_index().expect("split option has a cut");
    let lo = lls.cut_index().expect("split option has a cut");
    let layers = ProtocolLayer::ALL;
    LayerPlacement { cu: layers[..hi].to_vec(), du: layers[hi..lo].to_vec(), ru: layers[lo..].to_vec() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum BandwidthModel {
    /// Transport rate is `factor * user_rate`.
    Proportional { factor: f64 },
    /// Transport rate independent of user traffic.
    Constant { bps: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportRequirement {
    pub max_one_way_latency_s: f64,
    pub bandwidth: BandwidthModel,
}

impl TransportRequirement {
    fn validate(&self, option: SplitOption) -> Result<(), SplitError> {
        let invalid = |reason: &str| SplitError::InvalidRequirement { option, reason: reason.into() };
        if !(self.max_one_way_latency_s > 0.0) {
            return Err(invalid("max_one_way_latency_s must be > 0"));
        }
        match self.bandwidth {
            BandwidthModel::Proportional { factor } if !(factor >= 1.0) => {
                Err(invalid("proportional factor must be >= 1"))
            }
            BandwidthModel::Constant { bps } if !(bps > 0.0) => Err(invalid("constant bps must be > 0")),
            _ => Ok(()),
        }
    }
}

/// Configured transport requirement per split option.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SplitTable(pub BTreeMap<SplitOption, TransportRequirement>);

impl Default for SplitTable {
    /// Shipped defaults. These are configuration, not measured values.
    fn default() -> Self {
        let mut t = BTreeMap::new();
        t.insert(
            SplitOption::Option2,
            TransportRequirement {
                max_one_way_latency_s: 10e-3,
                bandwidth: BandwidthModel::Proportional { factor: 1.02 },
            },
        );
        t.insert(
            SplitOption::Option7_2,
            TransportRequirement { max_one_way_latency_s: 0.25e-3, bandwidth: BandwidthModel::Constant { bps: 2.5e9 } },
        );
        t.insert(
            SplitOption::Option8,
            TransportRequirement { max_one_way_latency_s: 0.25e-3, bandwidth: BandwidthModel::Constant { bps: 10e9 } },
        );
        SplitTable(t)
    }
}

impl SplitTable {
    /// Defaults with `overrides` replacing entries option by option.
    pub fn with_overrides(overrides: &SplitTable) -> SplitTable {
        let mut table = SplitTable::default();
        for (k, v) in &overrides.0 {
            table.0.insert(*k, *v);
        }
        table
    }

    /// Every entry is well formed and every high-level budget exceeds every
    /// low-level budget.
    pub fn validate(&self) -> Result<(), SplitError> {
        for (opt, req) in &self.0 {
            if *opt == SplitOption::NoSplit {
                return Err(SplitError::InvalidRequirement {
                    option: *opt,
                    reason: "the co-located pseudo-option carries no transport requirement".into(),
                });
            }
            req.validate(*opt)?;
        }
        let budgets =
            |level| self.0.iter().filter(move |(o, _)| o.level() == level).map(|(o, r)| (*o, r.max_one_way_latency_s));
        for (hls, hb) in budgets(SplitLevel::High) {
            for (lls, lb) in budgets(SplitLevel::Low) {
                if hb <= lb {
                    return Err(SplitError::InvalidRequirement {
                        option: hls,
                        reason: format!("latency budget {hb} s must exceed the budget of split {lls} ({lb} s)"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, opt: SplitOption) -> Option<&TransportRequirement> {
        self.0.get(&opt)
    }

    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Wrapper<'a> {
            splits: &'a SplitTable,
        }
        toml::to_string(&Wrapper { splits: self }).expect("split table serializes")
    }
}

/// `(latency_budget_s, required_bps)` for carrying `user_rate_bps` across `opt`.
pub fn transport_requirement(
    table: &SplitTable,
    opt: SplitOption,
    user_rate_bps: f64,
) -> Result<(f64, f64), SplitError> {
    if opt == SplitOption::NoSplit {
        return Ok((f64::INFINITY, 0.0));
    }
    let req = table.get(opt).ok_or(SplitError::MissingTableEntry(opt))?;
    let bps = match req.bandwidth {
        BandwidthModel::Proportional { factor } => factor * user_rate_bps,
        BandwidthModel::Constant { bps } => bps,
    };
    Ok((req.max_one_way_latency_s, bps))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "constraint", rename_all = "snake_case")]
pub enum Violation {
    LatencyExceeded { by_s: f64 },
    BandwidthShort { by_bps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "violations", rename_all = "snake_case")]
pub enum Feasibility {
    Feasible,
    Violations(Vec<Violation>),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }

    pub fn latency_exceeded(&self) -> bool {
        match self {
            Feasibility::Feasible => false,
            Feasibility::Violations(v) => v.iter().any(|v| matches!(v, Violation::LatencyExceeded { .. })),
        }
    }

    pub fn summary(&self) -> String {
        match self {
            Feasibility::Feasible => "Feasible".into(),
            Feasibility::Violations(v) => v
                .iter()
                .map(|v| match v {
                    Violation::LatencyExceeded { by_s } => format!("LatencyExceeded(by={by_s}s)"),
                    Violation::BandwidthShort { by_bps } => format!("BandwidthShort(by={by_bps}bps)"),
                })
                .collect::<Vec<_>>()
                .join(","),
        }
    }
}

pub fn check_split_feasibility(
    table: &SplitTable,
    opt: SplitOption,
    path_latency_s: f64,
    path_capacity_bps: f64,
    user_rate_bps: f64,
) -> Result<Feasibility, SplitError> {
    let (budget, required) = transport_requirement(table, opt, user_rate_bps)?;
    let mut violations = Vec::new();
    if path_latency_s > budget {
        violations.push(Violation::LatencyExceeded { by_s: path_latency_s - budget });
    }
    if path_capacity_bps < required {
        violations.push(Violation::BandwidthShort { by_bps: required - path_capacity_bps });
    }
    Ok(if violations.is_empty() { Feasibility::Feasible } else { Feasibility::Violations(violations) })
}
