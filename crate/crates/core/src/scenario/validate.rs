use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::schema::{ArchKind, MediumKind, ScenarioDescription};
use crate::topology::{attach_mobile_cell, build_topology, ElementId, ElementKind, McId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Location {
    /// Dotted field path, `[i]` for array entries.
    pub path: String,
    pub line: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub location: Location,
    pub code: &'static str,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match self.location.line {
            Some(line) => write!(f, "{sev}[{}] line {line} ({}): {}", self.code, self.location.path, self.message),
            None => write!(f, "{sev}[{}] {}: {}", self.code, self.location.path, self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.severity == Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }

    pub fn has_code(&self, code: &str) -> bool {
        self.diagnostics.iter().any(|d| d.code == code)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.diagnostics {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

struct Collector {
    out: Vec<Diagnostic>,
}

impl Collector {
    fn push(&mut self, severity: Severity, path: impl Into<String>, code: &'static str, message: impl Into<String>) {
        self.out.push(Diagnostic {
            severity,
            location: Location { path: path.into(), line: None },
            code,
            message: message.into(),
        });
    }

    fn error(&mut self, path: impl Into<String>, code: &'static str, message: impl Into<String>) {
        self.push(Severity::Error, path, code, message);
    }

    fn range(&mut self, path: impl Into<String>, ok: bool, message: impl Into<String>) {
        if !ok {
            self.error(path, "RangeError", message);
        }
    }

    fn resolve(&mut self, path: impl Into<String>, what: &str, name: &str, known: &BTreeSet<String>) {
        if !known.contains(name) {
            self.error(path, "UnresolvedReference", format!("unknown {what} `{name}`"));
        }
    }

    fn unique(&mut self, path: impl Into<String>, id: &str, seen: &mut BTreeSet<String>) {
        if !seen.insert(id.to_string()) {
            self.error(path, "DuplicateId", format!("duplicate id `{id}`"));
        }
    }
}

fn finite_pos(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn finite_nonneg(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

/// Semantic checks on a parsed scenario. Every problem is reported, not
/// just the first.
pub fn validate_scenario(s: &ScenarioDescription) -> Vec<Diagnostic> {
    let mut c = Collector { out: Vec::new() };

    let m = &s.metadata;
    c.range("metadata.end_time_s", finite_pos(m.end_time_s), "end_time_s must be > 0");
    c.range("metadata.sample_period_s", finite_pos(m.sample_period_s), "sample_period_s must be > 0");

    let t = &s.timing;
    c.range("timing.procedure_timeout_s", finite_pos(t.procedure_timeout_s), "procedure_timeout_s must be > 0");
    c.range(
        "timing.jitter_fraction",
        (0.0..=1.0).contains(&t.jitter_fraction),
        "jitter_fraction must be within [0, 1]",
    );
    c.range("timing.reference_packet_bytes", t.reference_packet_bytes > 0, "reference_packet_bytes must be > 0");
    c.range("timing.onboard_bus_latency_s", finite_nonneg(t.onboard_bus_latency_s), "bus latency must be >= 0");
    c.range("timing.onboard_bus_capacity_bps", finite_pos(t.onboard_bus_capacity_bps), "bus capacity must be > 0");
    for (name, v) in t.processing_delay.all() {
        c.range(format!("timing.processing_delay.{name}"), finite_nonneg(v), "processing delay must be >= 0");
    }

    if let Err(e) = s.radio.path_loss.validate() {
        c.error("radio.path_loss", "RangeError", e.to_string());
    }
    c.range(
        "radio.max_spectral_efficiency",
        finite_pos(s.radio.max_spectral_efficiency),
        "max_spectral_efficiency must be > 0",
    );
    for (name, p) in &s.radio.profiles {
        if let Err(e) = p.validate() {
            c.error(format!("radio.profiles.{name}"), "RangeError", e.to_string());
        }
    }
    let profiles: BTreeSet<String> = s.radio.profiles.keys().cloned().collect();

    if let Err(e) = s.split_table().validate() {
        c.error("splits", "RangeError", e.to_string());
    }

    let mut network_ids = BTreeSet::new();
    for (i, n) in s.networks.iter().enumerate() {
        c.unique(format!("networks[{i}].id"), &n.id, &mut network_ids);
    }
    let homes = s.networks.iter().filter(|n| n.home).count();
    if homes != 1 {
        c.error("networks", "InvalidValue", format!("exactly one network must be `home = true` (found {homes})"));
    }

    let trace_ids: BTreeSet<String> = s.traces.iter().map(|t| t.id.clone()).collect();
    let mc_ids: BTreeSet<String> = s.mobile_cells.iter().map(|m| m.id.clone()).collect();
    let mut element_ids = BTreeSet::new();
    for (i, e) in s.elements.iter().enumerate() {
        c.unique(format!("elements[{i}].id"), &e.id, &mut element_ids);
    }
    for (i, u) in s.ues.iter().enumerate() {
        c.unique(format!("ues[{i}].id"), &u.id, &mut element_ids);
    }
    for (i, mc) in s.mobile_cells.iter().enumerate() {
        let suffixes: &[&str] = match mc.arch {
            ArchKind::NoSplit => &["ru", "du", "cu", "mt"],
            ArchKind::Split2 => &["ru", "du", "mt"],
            ArchKind::IabMbsr => &["du", "mt"],
        };
        for s in suffixes {
            c.unique(format!("mobile_cells[{i}].id"), &format!("{}.{s}", mc.id), &mut element_ids);
        }
    }

    for (i, e) in s.elements.iter().enumerate() {
        let p = |f: &str| format!("elements[{i}].{f}");
        c.resolve(p("network"), "network", &e.network, &network_ids);
        if let Some(rp) = &e.radio_profile {
            c.resolve(p("radio_profile"), "radio profile", rp, &profiles);
        }
        if e.kind == ElementKind::Ue {
            c.error(p("kind"), "InvalidValue", "UEs are declared under [[ues]]");
        }
        if e.kind.requires_radio() && e.radio_profile.is_none() {
            c.error(p("radio_profile"), "InvalidValue", format!("{:?} `{}` needs a radio_profile", e.kind, e.id));
        }
        if e.kind.forbids_radio() && e.radio_profile.is_some() {
            c.error(p("radio_profile"), "InvalidValue", format!("{:?} `{}` has no air interface", e.kind, e.id));
        }
        if e.radio_override.is_some() && e.radio_profile.is_none() {
            c.error(p("radio_override"), "InvalidValue", "radio_override needs a radio_profile");
        }
        if e.iab_donor && e.kind != ElementKind::Du {
            c.error(p("iab_donor"), "InvalidValue", "only a DU can be an IAB-donor-DU");
        }
    }

    let mut link_ids = BTreeSet::new();
    for (i, l) in s.links.iter().enumerate() {
        let p = |f: &str| format!("links[{i}].{f}");
        c.unique(p("id"), &l.id, &mut link_ids);
        for end in &l.endpoints {
            c.resolve(p("endpoints"), "element", end, &element_ids);
        }
        match l.medium {
            MediumKind::Wired => match (l.one_way_latency_s, l.capacity_bps) {
                (Some(lat), Some(cap)) => {
                    c.range(p("one_way_latency_s"), finite_nonneg(lat), "one_way_latency_s must be >= 0");
                    c.range(p("capacity_bps"), finite_pos(cap), "capacity_bps must be > 0");
                }
                _ => c.error(p("medium"), "InvalidValue", "wired links need one_way_latency_s and capacity_bps"),
            },
            MediumKind::Radio => {
                if l.one_way_latency_s.is_some() || l.capacity_bps.is_some() {
                    c.push(
                        Severity::Warning,
                        p("medium"),
                        "InvalidValue",
                        "radio link quality comes from the radio model; latency/capacity ignored",
                    );
                }
            }
        }
    }

    let mut seen_traces = BTreeSet::new();
    for (i, t) in s.traces.iter().enumerate() {
        let p = |f: &str| format!("traces[{i}].{f}");
        c.unique(p("id"), &t.id, &mut seen_traces);
        match t.to_trace() {
            Ok(tr) => {
                if let Err(e) = tr.validate() {
                    c.error(p("waypoints"), "RangeError", e.to_string());
                }
            }
            Err(msg) => c.error(format!("traces[{i}]"), "InvalidValue", msg),
        }
    }

    let mut seen_mcs = BTreeSet::new();
    let element_cus: BTreeSet<String> =
        s.elements.iter().filter(|e| e.kind == ElementKind::Cu).map(|e| e.id.clone()).collect();
    for (i, mc) in s.mobile_cells.iter().enumerate() {
        let p = |f: &str| format!("mobile_cells[{i}].{f}");
        c.unique(p("id"), &mc.id, &mut seen_mcs);
        c.resolve(p("trace"), "trace", &mc.trace, &trace_ids);
        c.resolve(p("attach.target"), "element", &mc.attach.target, &element_ids);
        c.resolve(p("access_radio_profile"), "radio profile", &mc.access_radio_profile, &profiles);
        c.resolve(p("mt_radio_profile"), "radio profile", &mc.mt_radio_profile, &profiles);
        c.range(p("user_rate_bps"), finite_nonneg(mc.user_rate_bps), "user_rate_bps must be >= 0");
        match (&mc.arch, &mc.cu) {
            (ArchKind::NoSplit, Some(_)) => c.push(
                Severity::Warning,
                p("cu"),
                "InvalidValue",
                "a no-split mobile cell carries its own CU; `cu` ignored",
            ),
            (ArchKind::NoSplit, None) => {}
            (_, None) => c.error(p("cu"), "InvalidValue", "split and IAB mobile cells need a `cu`"),
            (_, Some(cu)) => c.resolve(p("cu"), "CU", cu, &element_cus),
        }
    }

    for (i, u) in s.ues.iter().enumerate() {
        let p = |f: &str| format!("ues[{i}].{f}");
        if let Some(n) = &u.network {
            c.resolve(p("network"), "network", n, &network_ids);
        }
        c.resolve(p("radio_profile"), "radio profile", &u.radio_profile, &profiles);
        match (&u.position_m, &u.trace) {
            (Some(_), None) => {}
            (None, Some(t)) => c.resolve(p("trace"), "trace", t, &trace_ids),
            _ => c.error(format!("ues[{i}]"), "InvalidValue", "a UE needs exactly one of position_m or trace"),
        }
    }

    if let Some(g) = &s.grid {
        c.range("grid.x1_m", g.x1_m > g.x0_m, "x1_m must exceed x0_m");
        c.range("grid.y1_m", g.y1_m > g.y0_m, "y1_m must exceed y0_m");
        c.range("grid.resolution_m", finite_pos(g.resolution_m), "resolution_m must be > 0");
        c.resolve("grid.rx_profile", "radio profile", &g.rx_profile, &profiles);
        if let Some(sp) = g.sample_period_s {
            c.range("grid.sample_period_s", finite_pos(sp), "sample_period_s must be > 0");
        }
    }

    for (i, f) in s.faults.iter().enumerate() {
        let p = |x: &str| format!("faults[{i}].{x}");
        c.range(p("time_s"), finite_nonneg(f.time_s), "time_s must be >= 0");
        if f.time_s > s.metadata.end_time_s {
            c.push(Severity::Warning, p("time_s"), "RangeError", "fault scheduled after end_time_s never fires");
        }
        if f.action.targets_link() {
            let generated: BTreeSet<String> = mc_ids.iter().map(|m| format!("{m}.air")).collect();
            if !link_ids.contains(&f.target) && !generated.contains(&f.target) {
                c.error(p("target"), "UnresolvedReference", format!("unknown link `{}`", f.target));
            }
        } else {
            c.resolve(p("target"), "mobile cell", &f.target, &mc_ids);
        }
    }

    if !c.out.iter().any(|d| d.severity == Severity::Error) {
        structural(s, &mut c);
    }
    c.out
}

fn structural(s: &ScenarioDescription, c: &mut Collector) {
    let topo = match build_topology(s) {
        Ok(t) => t,
        Err(e) => {
            c.error("topology", e.code(), e.to_string());
            return;
        }
    };
    for (i, mc) in s.mobile_cells.iter().enumerate() {
        let target = ElementId::from(mc.attach.target.as_str());
        if let Err(e) = attach_mobile_cell(&topo, &McId(mc.id.clone()), &target, mc.attach.mode) {
            c.error(format!("mobile_cells[{i}].attach"), e.code(), e.to_string());
        }
    }
    for (i, u) in s.ues.iter().enumerate() {
        let net = u.network.clone().unwrap_or_else(|| s.home_network().unwrap_or_default().to_string());
        let any_cell =
            topo.access_cells().any(|e| e.network.0 == net || (e.platform().is_some() && topo.home_network().0 == net));
        if !any_cell {
            c.push(Severity::Warning, format!("ues[{i}]"), "Unreachable", "no cell of the UE's network exists");
        }
    }
}
