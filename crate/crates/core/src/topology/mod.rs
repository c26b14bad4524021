//! Typed element/link graph of home and overlay networks plus the mobile
//! cells riding on top of them.
//!
//! A [`Topology`] is immutable once built: [`Topology::from_parts`] checks
//! every structural rule and precomputes the derived relations (DU
//! controllers, RU-to-DU wiring, the IAB forest) that the rest of the
//! simulator queries.

mod attach;
mod build;
mod iab;
mod path;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::mobility::Position;
use crate::radio::RadioParams;

pub use attach::{attach_mobile_cell, AttachmentPlan};
pub use build::build_topology;
pub use iab::{ForestError, IabForest};
pub use path::{Hop, Path};

macro_rules! string_id {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

string_id!(ElementId);
string_id!(LinkId);
string_id!(NetworkId);
string_id!(
    /// Mobile cell (platform) identifier.
    McId
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    /// AMF and SMF collapsed into one control-plane endpoint.
    CoreControl,
    Upf,
    Cu,
    Du,
    Ru,
    MonolithicGnb,
    Mt,
    Ue,
}

impl ElementKind {
    pub fn requires_radio(self) -> bool {
        matches!(self, ElementKind::Ru | ElementKind::MonolithicGnb | ElementKind::Mt | ElementKind::Ue)
    }

    pub fn forbids_radio(self) -> bool {
        matches!(self, ElementKind::Cu | ElementKind::Upf | ElementKind::CoreControl)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Fixed(Position),
    /// Rides on a mobile cell and shares its position.
    Platform(McId),
    /// Moves along its own trace (mobile UEs).
    Trace(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkElement {
    pub id: ElementId,
    pub kind: ElementKind,
    pub network: NetworkId,
    pub placement: Placement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radio: Option<RadioParams>,
    /// Marks a DU as an IAB-donor-DU.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub iab_donor: bool,
}

impl NetworkElement {
    pub fn platform(&self) -> Option<&McId> {
        match &self.placement {
            Placement::Platform(mc) => Some(mc),
            _ => None,
        }
    }

    pub fn is_fixed_infra(&self) -> bool {
        self.platform().is_none() && self.kind != ElementKind::Ue
    }

    /// Cells UEs (and MTs) can attach to.
    pub fn has_access_interface(&self) -> bool {
        match self.kind {
            ElementKind::Ru | ElementKind::MonolithicGnb => true,
            ElementKind::Du => self.radio.is_some(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Medium {
    Wired {
        one_way_latency_s: f64,
        capacity_bps: f64,
    },
    /// Quality computed from positions by the radio model.
    Radio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkRole {
    F1,
    NgBackhaul,
    AccessAir,
    BackhaulAir,
    InternalBus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    pub endpoints: (ElementId, ElementId),
    pub medium: Medium,
    pub role: LinkRole,
}

impl Link {
    pub fn other(&self, end: &ElementId) -> Option<&ElementId> {
        if &self.endpoints.0 == end {
            Some(&self.endpoints.1)
        } else if &self.endpoints.1 == end {
            Some(&self.endpoints.0)
        } else {
            None
        }
    }

    pub fn is_radio(&self) -> bool {
        matches!(self.medium, Medium::Radio)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobileCellArch {
    /// CU, DU and RU on board.
    NoSplit,
    /// DU and RU on board; the CU sits in the home network.
    Split2 { cu: ElementId },
    /// Mobile IAB-node (DU + MT) under an IAB-donor.
    IabMbsr { donor_cu: ElementId },
}

impl MobileCellArch {
    pub fn label(&self) -> &'static str {
        match self {
            MobileCellArch::NoSplit => "no_split",
            MobileCellArch::Split2 { .. } => "split2",
            MobileCellArch::IabMbsr { .. } => "iab_mbsr",
        }
    }

    pub fn configured_cu(&self) -> Option<&ElementId> {
        match self {
            MobileCellArch::NoSplit => None,
            MobileCellArch::Split2 { cu } => Some(cu),
            MobileCellArch::IabMbsr { donor_cu } => Some(donor_cu),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttachMode {
    /// The target gNB is used as a conventional gNB; the MT is a regular UE.
    Overlay,
    /// The MT joins an IAB tree through BAP.
    IabDirect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attachment {
    pub target: ElementId,
    pub mode: AttachMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobileCell {
    pub id: McId,
    pub arch: MobileCellArch,
    pub mt_id: ElementId,
    /// Every element on the platform, the MT included.
    pub onboard_ids: Vec<ElementId>,
    /// The element UEs attach to.
    pub access_id: ElementId,
    pub trace_id: String,
    pub bap_capable: bool,
    pub attachment: Attachment,
    /// Offered user traffic, used for transport feasibility.
    pub user_rate_bps: f64,
}

impl MobileCell {
    /// Onboard elements in traffic order, from the access element to the MT.
    pub fn onboard_chain(&self) -> Vec<ElementId> {
        let on = |suffix: &str| ElementId(format!("{}.{}", self.id, suffix));
        match self.arch {
            MobileCellArch::NoSplit => vec![on("ru"), on("du"), on("cu"), self.mt_id.clone()],
            MobileCellArch::Split2 { .. } => vec![on("ru"), on("du"), self.mt_id.clone()],
            MobileCellArch::IabMbsr { .. } => vec![on("du"), self.mt_id.clone()],
        }
    }

    pub fn du_id(&self) -> ElementId {
        ElementId(format!("{}.du", self.id))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Network {
    pub id: NetworkId,
    pub home: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkInfo {
    pub core_control: ElementId,
    pub upfs: Vec<ElementId>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("{referrer} references unknown `{missing}`")]
    DanglingReference { referrer: String, missing: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("network `{network}` has no {missing}")]
    MissingCore { network: String, missing: &'static str },
    #[error("unknown mobile cell `{0}`")]
    UnknownMobileCell(String),
    #[error("mobile cell `{0}` is not attached (MT session not active)")]
    NotAttached(String),
    #[error("no route from `{from}` to {to}")]
    PartitionedTopology { from: String, to: String },
    #[error("mobile cell `{mc}` needs BAP on its MT to attach directly to an IAB-donor")]
    BapRequired { mc: String },
    #[error("`{target}` is not part of an IAB tree")]
    NotADonor { target: String },
    #[error("`{target}` has no air interface")]
    NoAirInterface { target: String },
    #[error(transparent)]
    Forest(#[from] ForestError),
}

impl TopologyError {
    pub fn code(&self) -> &'static str {
        match self {
            TopologyError::DanglingReference { .. } => "DanglingReference",
            TopologyError::DuplicateId(_) => "DuplicateId",
            TopologyError::InvariantViolation(_) | TopologyError::Forest(_) => "InvariantViolation",
            TopologyError::MissingCore { .. } => "MissingCore",
            TopologyError::UnknownMobileCell(_) => "UnknownMobileCell",
            TopologyError::NotAttached(_) => "NotAttached",
            TopologyError::PartitionedTopology { .. } => "PartitionedTopology",
            TopologyError::BapRequired { .. } => "BapRequired",
            TopologyError::NotADonor { .. } => "NotADonor",
            TopologyError::NoAirInterface { .. } => "NoAirInterface",
        }
    }
}

fn violation(msg: impl Into<String>) -> TopologyError {
    TopologyError::InvariantViolation(msg.into())
}

/// Raw material of a topology, in canonical (id-sorted) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyParts {
    pub networks: Vec<Network>,
    pub elements: Vec<NetworkElement>,
    pub links: Vec<Link>,
    pub mobile_cells: Vec<MobileCell>,
}

#[derive(Debug, Clone, Default)]
struct Derived {
    home: Option<NetworkId>,
    network_info: BTreeMap<NetworkId, NetworkInfo>,
    adjacency: BTreeMap<ElementId, Vec<(ElementId, LinkId)>>,
    controller: BTreeMap<ElementId, ElementId>,
    ru_du: BTreeMap<ElementId, ElementId>,
    forest: IabForest,
}

#[derive(Debug, Clone)]
pub struct Topology {
    networks: BTreeMap<NetworkId, Network>,
    elements: BTreeMap<ElementId, NetworkElement>,
    links: BTreeMap<LinkId, Link>,
    mobile_cells: BTreeMap<McId, MobileCell>,
    derived: Derived,
}

impl PartialEq for Topology {
    fn eq(&self, other: &Self) -> bool {
        self.networks == other.networks
            && self.elements == other.elements
            && self.links == other.links
            && self.mobile_cells == other.mobile_cells
    }
}

impl Topology {
    pub fn from_parts(parts: TopologyParts) -> Result<Topology, TopologyError> {
        let mut networks = BTreeMap::new();
        for n in parts.networks {
            let id = n.id.clone();
            if networks.insert(id.clone(), n).is_some() {
                return Err(TopologyError::DuplicateId(id.0));
            }
        }
        let mut elements = BTreeMap::new();
        for e in parts.elements {
            let id = e.id.clone();
            if elements.insert(id.clone(), e).is_some() {
                return Err(TopologyError::DuplicateId(id.0));
            }
        }
        let mut links = BTreeMap::new();
        for l in parts.links {
            let id = l.id.clone();
            if links.insert(id.clone(), l).is_some() {
                return Err(TopologyError::DuplicateId(id.0));
            }
        }
        let mut mobile_cells = BTreeMap::new();
        for mc in parts.mobile_cells {
            let id = mc.id.clone();
            if mobile_cells.insert(id.clone(), mc).is_some() {
                return Err(TopologyError::DuplicateId(id.0));
            }
        }
        let mut t = Topology { networks, elements, links, mobile_cells, derived: Derived::default() };
        t.derive()?;
        Ok(t)
    }

    pub fn to_parts(&self) -> TopologyParts {
        TopologyParts {
            networks: self.networks.values().cloned().collect(),
            elements: self.elements.values().cloned().collect(),
            links: self.links.values().cloned().collect(),
            mobile_cells: self.mobile_cells.values().cloned().collect(),
        }
    }

    /// Deterministic JSON form used for golden files and round trips.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    pub fn from_canonical_json(text: &str) -> Result<Topology, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    fn derive(&mut self) -> Result<(), TopologyError> {
        self.check_elements()?;
        self.check_networks()?;
        self.check_links()?;
        self.build_adjacency();
        self.derive_ru_du()?;
        self.check_mobile_cells()?;
        self.derive_forest()?;
        self.derive_controllers()?;
        Ok(())
    }

    fn check_elements(&self) -> Result<(), TopologyError> {
        for e in self.elements.values() {
            if !self.networks.contains_key(&e.network) {
                return Err(TopologyError::DanglingReference {
                    referrer: format!("element `{}`", e.id),
                    missing: e.network.0.clone(),
                });
            }
            if e.kind.forbids_radio() && e.radio.is_some() {
                return Err(violation(format!("{:?} `{}` cannot have radio parameters", e.kind, e.id)));
            }
            if e.kind.requires_radio() && e.radio.is_none() {
                return Err(violation(format!("{:?} `{}` needs radio parameters", e.kind, e.id)));
            }
            if e.iab_donor && e.kind != ElementKind::Du {
                return Err(violation(format!("only a DU can be an IAB-donor-DU (`{}`)", e.id)));
            }
            if let Placement::Platform(mc) = &e.placement {
                if !self.mobile_cells.contains_key(mc) {
                    return Err(TopologyError::DanglingReference {
                        referrer: format!("element `{}`", e.id),
                        missing: mc.0.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    fn check_networks(&mut self) -> Result<(), TopologyError> {
        let homes: Vec<_> = self.networks.values().filter(|n| n.home).map(|n| n.id.clone()).collect();
        if homes.len() != 1 {
            return Err(violation(format!("exactly one home network required, found {}", homes.len())));
        }
        self.derived.home = Some(homes[0].clone());
        for id in self.networks.keys() {
            let of_kind = |k: ElementKind| -> Vec<ElementId> {
                self.elements.values().filter(|e| &e.network == id && e.kind == k).map(|e| e.id.clone()).collect()
            };
            let cores = of_kind(ElementKind::CoreControl);
            let upfs = of_kind(ElementKind::Upf);
            match cores.len() {
                0 => return Err(TopologyError::MissingCore { network: id.0.clone(), missing: "CoreControl" }),
                1 => {}
                n => return Err(violation(format!("network `{id}` has {n} CoreControl elements"))),
            }
            if upfs.is_empty() {
                return Err(TopologyError::MissingCore { network: id.0.clone(), missing: "Upf" });
            }
            self.derived.network_info.insert(id.clone(), NetworkInfo { core_control: cores[0].clone(), upfs });
        }
        Ok(())
    }

    fn check_links(&self) -> Result<(), TopologyError> {
        use ElementKind::*;
        for l in self.links.values() {
            let (a, b) = (&l.endpoints.0, &l.endpoints.1);
            let mut ends = Vec::with_capacity(2);
            for end in [a, b] {
                match self.elements.get(end) {
                    Some(e) => ends.push(e),
                    None => {
                        return Err(TopologyError::DanglingReference {
                            referrer: format!("link `{}`", l.id),
                            missing: end.0.clone(),
                        })
                    }
                }
            }
            if a == b {
                return Err(violation(format!("link `{}` is a self-loop", l.id)));
            }
            let (ea, eb) = (ends[0], ends[1]);
            let pair =
                |x: &NetworkElement,
                 y: &NetworkElement,
                 fx: &dyn Fn(&NetworkElement) -> bool,
                 fy: &dyn Fn(&NetworkElement) -> bool| { (fx(x) && fy(y)) || (fx(y) && fy(x)) };
            let wired = match l.medium {
                Medium::Wired { one_way_latency_s, capacity_bps } => {
                    if !(one_way_latency_s >= 0.0) || !(capacity_bps > 0.0) {
                        return Err(violation(format!("wired link `{}` needs latency >= 0 and capacity > 0", l.id)));
                    }
                    true
                }
                Medium::Radio => false,
            };
            let ok = match l.role {
                LinkRole::F1 => wired && pair(ea, eb, &|e| e.kind == Cu, &|e| e.kind == Du),
                LinkRole::AccessAir => {
                    !wired && pair(ea, eb, &|e| e.has_access_interface(), &|e| matches!(e.kind, Ue | Mt))
                }
                LinkRole::BackhaulAir => {
                    !wired && pair(ea, eb, &|e| e.kind == Du && e.radio.is_some(), &|e| e.kind == Mt)
                }
                LinkRole::NgBackhaul | LinkRole::InternalBus => wired,
            };
            if !ok {
                return Err(violation(format!(
                    "link `{}` ({:?}, {}) cannot join {:?} `{}` and {:?} `{}`",
                    l.id,
                    l.role,
                    if wired { "wired" } else { "radio" },
                    ea.kind,
                    ea.id,
                    eb.kind,
                    eb.id
                )));
            }
        }
        Ok(())
    }

    fn build_adjacency(&mut self) {
        let mut adj: BTreeMap<ElementId, Vec<(ElementId, LinkId)>> =
            self.elements.keys().map(|k| (k.clone(), Vec::new())).collect();
        for l in self.links.values() {
            let (a, b) = &l.endpoints;
            adj.get_mut(a).expect("endpoint checked").push((b.clone(), l.id.clone()));
            adj.get_mut(b).expect("endpoint checked").push((a.clone(), l.id.clone()));
        }
        for v in adj.values_mut() {
            v.sort();
        }
        self.derived.adjacency = adj;
    }

    fn derive_ru_du(&mut self) -> Result<(), TopologyError> {
        for e in self.elements.values().filter(|e| e.kind == ElementKind::Ru) {
            let dus: Vec<_> = self
                .neighbors_by_role(&e.id, LinkRole::InternalBus)
                .filter(|n| self.kind_of(n) == Some(ElementKind::Du))
                .cloned()
                .collect();
            if dus.len() != 1 {
                return Err(violation(format!("RU `{}` must be wired to exactly one DU, found {}", e.id, dus.len())));
            }
            self.derived.ru_du.insert(e.id.clone(), dus[0].clone());
        }
        Ok(())
    }

    fn check_mobile_cells(&self) -> Result<(), TopologyError> {
        for mc in self.mobile_cells.values() {
            let referrer = || format!("mobile cell `{}`", mc.id);
            let onboard: Vec<_> = self.elements.values().filter(|e| e.platform() == Some(&mc.id)).collect();
            let mts: Vec<_> = onboard.iter().filter(|e| e.kind == ElementKind::Mt).collect();
            if mts.len() != 1 || mts[0].id != mc.mt_id {
                return Err(violation(format!("mobile cell `{}` must host exactly one MT (`{}`)", mc.id, mc.mt_id)));
            }
            let mut listed: Vec<_> = mc.onboard_ids.clone();
            listed.sort();
            let actual: Vec<_> = onboard.iter().map(|e| e.id.clone()).collect();
            if listed != actual {
                return Err(violation(format!("mobile cell `{}` onboard list does not match its elements", mc.id)));
            }
            if !listed.contains(&mc.access_id) {
                return Err(violation(format!("mobile cell `{}` access element is not on board", mc.id)));
            }
            if let Some(cu) = mc.arch.configured_cu() {
                let e = self
                    .elements
                    .get(cu)
                    .ok_or_else(|| TopologyError::DanglingReference { referrer: referrer(), missing: cu.0.clone() })?;
                if e.kind != ElementKind::Cu || e.platform().is_some() {
                    return Err(violation(format!("mobile cell `{}` CU `{cu}` must be a fixed CU", mc.id)));
                }
                if Some(&e.network) != self.derived.home.as_ref() {
                    return Err(violation(format!(
                        "mobile cell `{}` CU `{cu}` must belong to the home network",
                        mc.id
                    )));
                }
            }
            if !self.elements.contains_key(&mc.attachment.target) {
                return Err(TopologyError::DanglingReference {
                    referrer: referrer(),
                    missing: mc.attachment.target.0.clone(),
                });
            }
            if !(mc.user_rate_bps >= 0.0) {
                return Err(violation(format!("mobile cell `{}` user rate must be >= 0", mc.id)));
            }
        }
        Ok(())
    }

    fn derive_forest(&mut self) -> Result<(), TopologyError> {
        let donors: Vec<ElementId> = self.elements.values().filter(|e| e.iab_donor).map(|e| e.id.clone()).collect();
        let mut edges = Vec::new();
        for l in self.links.values().filter(|l| l.role == LinkRole::BackhaulAir) {
            let (parent, mt) = if self.kind_of(&l.endpoints.0) == Some(ElementKind::Du) {
                (&l.endpoints.0, &l.endpoints.1)
            } else {
                (&l.endpoints.1, &l.endpoints.0)
            };
            let child = self.node_du_of_mt(mt)?;
            edges.push((child, mt.clone(), parent.clone()));
        }
        self.derived.forest = IabForest::new(donors, edges)?;
        Ok(())
    }

    /// The DU that forms an IAB node together with `mt`.
    fn node_du_of_mt(&self, mt: &ElementId) -> Result<ElementId, TopologyError> {
        if let Some(mc) = self.element(mt).and_then(|e| e.platform()) {
            return Ok(self.mobile_cells[mc].du_id());
        }
        let dus: Vec<_> = self
            .neighbors_by_role(mt, LinkRole::InternalBus)
            .filter(|n| self.kind_of(n) == Some(ElementKind::Du))
            .cloned()
            .collect();
        match dus.as_slice() {
            [du] => Ok(du.clone()),
            _ => Err(violation(format!("IAB MT `{mt}` must be wired to exactly one DU"))),
        }
    }

    fn derive_controllers(&mut self) -> Result<(), TopologyError> {
        let mut ctl: BTreeMap<ElementId, BTreeSet<ElementId>> = BTreeMap::new();
        for l in self.links.values().filter(|l| l.role == LinkRole::F1) {
            let (cu, du) = if self.kind_of(&l.endpoints.0) == Some(ElementKind::Cu) {
                (&l.endpoints.0, &l.endpoints.1)
            } else {
                (&l.endpoints.1, &l.endpoints.0)
            };
            ctl.entry(du.clone()).or_default().insert(cu.clone());
        }
        let first_pass = ctl.clone();
        let donor_cu = |donor: &ElementId| -> Result<ElementId, TopologyError> {
            match first_pass.get(donor).map(|s| s.iter().collect::<Vec<_>>()) {
                Some(v) if v.len() == 1 => Ok(v[0].clone()),
                _ => Err(violation(format!("IAB-donor-DU `{donor}` must be wired (F1) to exactly one CU"))),
            }
        };
        for mc in self.mobile_cells.values() {
            let du = mc.du_id();
            let cu = match (&mc.arch, mc.attachment.mode) {
                (MobileCellArch::NoSplit, _) => continue,
                (_, AttachMode::IabDirect) => match self.derived.forest.root_donor(&mc.attachment.target) {
                    Some(root) => donor_cu(&root)?,
                    // Rejected later by attach planning.
                    None => mc.arch.configured_cu().cloned().expect("split arch has a CU"),
                },
                (arch, AttachMode::Overlay) => arch.configured_cu().cloned().expect("split arch has a CU"),
            };
            ctl.entry(du).or_default().insert(cu);
        }
        for node in self.derived.forest.nodes() {
            if self.element(&node).and_then(|e| e.platform()).is_some() {
                continue;
            }
            let root = self.derived.forest.root_donor(&node).expect("forest nodes reach a donor");
            ctl.entry(node.clone()).or_default().insert(donor_cu(&root)?);
        }
        for e in self.elements.values().filter(|e| e.kind == ElementKind::Du) {
            match ctl.get(&e.id) {
                Some(cus) if cus.len() == 1 => {
                    self.derived.controller.insert(e.id.clone(), cus.iter().next().unwrap().clone());
                }
                Some(cus) => {
                    return Err(violation(format!("DU `{}` is controlled by {} CUs", e.id, cus.len())));
                }
                None => return Err(violation(format!("DU `{}` has no controlling CU", e.id))),
            }
        }
        for mc in self.mobile_cells.values() {
            if let MobileCellArch::IabMbsr { donor_cu } = &mc.arch {
                let controls_donor =
                    self.derived.forest.donors().any(|d| self.derived.controller.get(d) == Some(donor_cu));
                if !controls_donor {
                    return Err(violation(format!("`{donor_cu}` does not control any IAB-donor-DU")));
                }
            }
        }
        Ok(())
    }

    // ---- queries ----

    pub fn element(&self, id: &ElementId) -> Option<&NetworkElement> {
        self.elements.get(id)
    }

    pub fn kind_of(&self, id: &ElementId) -> Option<ElementKind> {
        self.elements.get(id).map(|e| e.kind)
    }

    pub fn elements(&self) -> impl Iterator<Item = &NetworkElement> {
        self.elements.values()
    }

    pub fn link(&self, id: &LinkId) -> Option<&Link> {
        self.links.get(id)
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.links.values()
    }

    pub fn networks(&self) -> impl Iterator<Item = &Network> {
        self.networks.values()
    }

    pub fn home_network(&self) -> &NetworkId {
        self.derived.home.as_ref().expect("validated topology has a home network")
    }

    pub fn network_info(&self, id: &NetworkId) -> Option<&NetworkInfo> {
        self.derived.network_info.get(id)
    }

    pub fn mobile_cell(&self, id: &McId) -> Option<&MobileCell> {
        self.mobile_cells.get(id)
    }

    pub fn mobile_cells(&self) -> impl Iterator<Item = &MobileCell> {
        self.mobile_cells.values()
    }

    pub fn iab_forest(&self) -> &IabForest {
        &self.derived.forest
    }

    pub fn controller_of(&self, du: &ElementId) -> Option<&ElementId> {
        self.derived.controller.get(du)
    }

    pub fn du_of_ru(&self, ru: &ElementId) -> Option<&ElementId> {
        self.derived.ru_du.get(ru)
    }

    /// Element terminating RRC for a cell.
    pub fn rrc_terminus(&self, cell: &ElementId) -> Option<ElementId> {
        match self.kind_of(cell)? {
            ElementKind::MonolithicGnb => Some(cell.clone()),
            ElementKind::Ru => self.controller_of(self.du_of_ru(cell)?).cloned(),
            ElementKind::Du => self.controller_of(cell).cloned(),
            _ => None,
        }
    }

    pub fn neighbors(&self, id: &ElementId) -> &[(ElementId, LinkId)] {
        self.derived.adjacency.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    fn neighbors_by_role<'a>(&'a self, id: &ElementId, role: LinkRole) -> impl Iterator<Item = &'a ElementId> + 'a {
        self.neighbors(id).iter().filter(move |(_, l)| self.links[l].role == role).map(|(n, _)| n)
    }

    /// Lowest-id link joining `a` and `b`.
    pub fn link_between(&self, a: &ElementId, b: &ElementId) -> Option<&Link> {
        self.neighbors(a).iter().find(|(n, _)| n == b).map(|(_, l)| &self.links[l])
    }

    /// Fixed cells and mobile-cell access elements, in id order.
    pub fn access_cells(&self) -> impl Iterator<Item = &NetworkElement> {
        self.elements.values().filter(|e| {
            e.has_access_interface()
                && match e.platform() {
                    Some(mc) => self.mobile_cells[mc].access_id == e.id,
                    None => true,
                }
        })
    }
}

impl Serialize for Topology {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_parts().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Topology {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let parts = TopologyParts::deserialize(d)?;
        Topology::from_parts(parts).map_err(serde::de::Error::custom)
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn minimal_topology_has_six_elements() {
        let t = Topology::from_parts(minimal()).unwrap();
        assert_eq!(t.elements().count(), 6);
        assert_eq!(t.controller_of(&"du".into()), Some(&"cu".into()));
        assert_eq!(t.rrc_terminus(&"ru".into()), Some("cu".into()));
    }

    #[test]
    fn dangling_link_endpoint() {
        let mut p = minimal();
        p.links.push(wired("l-bad", "ghost-cu", "du", LinkRole::F1));
        assert_eq!(
            Topology::from_parts(p).unwrap_err(),
            TopologyError::DanglingReference { referrer: "link `l-bad`".into(), missing: "ghost-cu".into() }
        );
    }

    #[test]
    fn du_with_two_cus_is_rejected() {
        let mut p = minimal();
        p.elements.push(el("cu2", ElementKind::Cu, "hn", false));
        p.links.push(wired("l-f1b", "cu2", "du", LinkRole::F1));
        assert!(matches!(Topology::from_parts(p), Err(TopologyError::InvariantViolation(m)) if m.contains("2 CUs")));
    }

    #[test]
    fn du_without_cu_is_rejected() {
        let mut p = minimal();
        p.links.retain(|l| l.role != LinkRole::F1);
        assert!(matches!(Topology::from_parts(p), Err(TopologyError::InvariantViolation(_))));
    }

    #[test]
    fn missing_core_and_upf() {
        let mut p = minimal();
        p.elements.retain(|e| e.kind != ElementKind::Upf);
        p.links.retain(|l| l.id.0 != "l-cu-upf");
        assert_eq!(
            Topology::from_parts(p).unwrap_err(),
            TopologyError::MissingCore { network: "hn".into(), missing: "Upf" }
        );
        let mut p = minimal();
        p.elements.retain(|e| e.kind != ElementKind::CoreControl);
        p.links.retain(|l| l.id.0 != "l-cu-core");
        assert_eq!(
            Topology::from_parts(p).unwrap_err(),
            TopologyError::MissingCore { network: "hn".into(), missing: "CoreControl" }
        );
    }

    #[test]
    fn radio_presence_rules() {
        let mut p = minimal();
        p.elements.iter_mut().find(|e| e.id.0 == "cu").unwrap().radio = Some(radio());
        assert!(matches!(Topology::from_parts(p), Err(TopologyError::InvariantViolation(_))));
        let mut p = minimal();
        p.elements.iter_mut().find(|e| e.id.0 == "ru").unwrap().radio = None;
        assert!(matches!(Topology::from_parts(p), Err(TopologyError::InvariantViolation(_))));
    }

    #[test]
    fn f1_must_join_cu_and_du() {
        let mut p = minimal();
        p.links.push(wired("l-odd", "cu", "upf", LinkRole::F1));
        assert!(matches!(Topology::from_parts(p), Err(TopologyError::InvariantViolation(m)) if m.contains("l-odd")));
    }

    #[test]
    fn access_air_joins_cell_and_terminal_only() {
        let mut p = minimal();
        p.links.push(radio_link("air", "ru", "ue1", LinkRole::AccessAir));
        Topology::from_parts(p).unwrap();
        let mut p = minimal();
        p.links.push(radio_link("air", "cu", "ue1", LinkRole::AccessAir));
        assert!(Topology::from_parts(p).is_err());
    }

    #[test]
    fn wired_link_parameters_checked() {
        let mut p = minimal();
        p.links[0].medium = Medium::Wired { one_way_latency_s: -1.0, capacity_bps: 1.0 };
        assert!(Topology::from_parts(p).is_err());
        let mut p = minimal();
        p.links[0].medium = Medium::Wired { one_way_latency_s: 0.0, capacity_bps: 0.0 };
        assert!(Topology::from_parts(p).is_err());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut p = minimal();
        p.elements.push(el("cu", ElementKind::Cu, "hn", false));
        assert_eq!(Topology::from_parts(p).unwrap_err(), TopologyError::DuplicateId("cu".into()));
    }

    #[test]
    fn canonical_json_round_trip() {
        let t = Topology::from_parts(minimal()).unwrap();
        let text = t.to_canonical_json();
        let back = Topology::from_canonical_json(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_canonical_json(), text);
    }
}
