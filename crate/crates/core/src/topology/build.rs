use super::{
    AttachMode, Attachment, ElementId, ElementKind, Link, LinkRole, McId, Medium, MobileCell, MobileCellArch, Network,
    NetworkElement, Placement, Topology, TopologyError, TopologyParts,
};
use crate::radio::RadioParams;
use crate::scenario::{ArchKind, MediumKind, ScenarioDescription};

fn profile(s: &ScenarioDescription, name: &str, referrer: &str) -> Result<RadioParams, TopologyError> {
    s.radio
        .profiles
        .get(name)
        .cloned()
        .ok_or_else(|| TopologyError::DanglingReference { referrer: referrer.to_string(), missing: name.to_string() })
}

/// Instantiates the element/link graph described by a scenario, expanding
/// each mobile cell into its onboard elements and internal links.
pub fn build_topology(s: &ScenarioDescription) -> Result<Topology, TopologyError> {
    let networks = s.networks.iter().map(|n| Network { id: n.id.as_str().into(), home: n.home }).collect();
    let home = s.home_network().unwrap_or_default().to_string();
    let mut elements = Vec::new();
    let mut links = Vec::new();
    let mut mobile_cells = Vec::new();

    for e in &s.elements {
        let referrer = format!("element `{}`", e.id);
        let radio = match &e.radio_profile {
            Some(p) => {
                let base = profile(s, p, &referrer)?;
                Some(match &e.radio_override {
                    Some(o) => o.apply(&base),
                    None => base,
                })
            }
            None => None,
        };
        elements.push(NetworkElement {
            id: e.id.as_str().into(),
            kind: e.kind,
            network: e.network.as_str().into(),
            placement: Placement::Fixed(e.position_m.into()),
            radio,
            iab_donor: e.iab_donor,
        });
    }

    for l in &s.links {
        let medium = match l.medium {
            MediumKind::Radio => Medium::Radio,
            MediumKind::Wired => match (l.one_way_latency_s, l.capacity_bps) {
                (Some(one_way_latency_s), Some(capacity_bps)) => Medium::Wired { one_way_latency_s, capacity_bps },
                _ => {
                    return Err(TopologyError::InvariantViolation(format!(
                        "wired link `{}` needs one_way_latency_s and capacity_bps",
                        l.id
                    )))
                }
            },
        };
        links.push(Link {
            id: l.id.as_str().into(),
            endpoints: (l.endpoints[0].as_str().into(), l.endpoints[1].as_str().into()),
            medium,
            role: l.role,
        });
    }

    for ue in &s.ues {
        let referrer = format!("UE `{}`", ue.id);
        let placement = match (&ue.trace, ue.position_m) {
            (Some(t), _) => Placement::Trace(t.clone()),
            (None, Some(p)) => Placement::Fixed(p.into()),
            (None, None) => {
                return Err(TopologyError::InvariantViolation(format!("{referrer} needs position_m or trace")))
            }
        };
        elements.push(NetworkElement {
            id: ue.id.as_str().into(),
            kind: ElementKind::Ue,
            network: ue.network.clone().unwrap_or_else(|| home.clone()).into(),
            placement,
            radio: Some(profile(s, &ue.radio_profile, &referrer)?),
            iab_donor: false,
        });
    }

    let bus = Medium::Wired {
        one_way_latency_s: s.timing.onboard_bus_latency_s,
        capacity_bps: s.timing.onboard_bus_capacity_bps,
    };
    for mc in &s.mobile_cells {
        let referrer = format!("mobile cell `{}`", mc.id);
        let id = McId(mc.id.clone());
        let need_cu = || -> Result<ElementId, TopologyError> {
            mc.cu.as_deref().map(ElementId::from).ok_or_else(|| {
                TopologyError::InvariantViolation(format!("{referrer} needs a `cu` for its architecture"))
            })
        };
        let arch = match mc.arch {
            ArchKind::NoSplit => MobileCellArch::NoSplit,
            ArchKind::Split2 => MobileCellArch::Split2 { cu: need_cu()? },
            ArchKind::IabMbsr => MobileCellArch::IabMbsr { donor_cu: need_cu()? },
        };
        let target: ElementId = mc.attach.target.as_str().into();
        let target_el = elements.iter().find(|e: &&NetworkElement| e.id == target).cloned();
        let mt_network = target_el.as_ref().map(|e| e.network.0.clone()).unwrap_or_else(|| home.clone());
        let access_radio = profile(s, &mc.access_radio_profile, &referrer)?;
        let mt_radio = profile(s, &mc.mt_radio_profile, &referrer)?;

        let proto = MobileCell {
            id: id.clone(),
            arch,
            mt_id: ElementId(format!("{}.mt", mc.id)),
            onboard_ids: Vec::new(),
            access_id: ElementId(String::new()),
            trace_id: mc.trace.clone(),
            bap_capable: mc.bap_capable,
            attachment: Attachment { target: target.clone(), mode: mc.attach.mode },
            user_rate_bps: mc.user_rate_bps,
        };
        let chain = proto.onboard_chain();
        let access_id = chain[0].clone();
        let onboard = |eid: &ElementId, kind: ElementKind| {
            let (network, radio) = match kind {
                ElementKind::Mt => (mt_network.clone(), Some(mt_radio.clone())),
                _ if *eid == access_id => (home.clone(), Some(access_radio.clone())),
                _ => (home.clone(), None),
            };
            NetworkElement {
                id: eid.clone(),
                kind,
                network: network.into(),
                placement: Placement::Platform(id.clone()),
                radio,
                iab_donor: false,
            }
        };
        for eid in &chain {
            let kind = match eid.0.rsplit('.').next() {
                Some("ru") => ElementKind::Ru,
                Some("du") => ElementKind::Du,
                Some("cu") => ElementKind::Cu,
                _ => ElementKind::Mt,
            };
            elements.push(onboard(eid, kind));
        }
        for w in chain.windows(2) {
            let suffix = |e: &ElementId| e.0.rsplit('.').next().unwrap_or_default().to_string();
            let role = if w.iter().any(|e| suffix(e) == "cu") && w.iter().any(|e| suffix(e) == "du") {
                LinkRole::F1
            } else {
                LinkRole::InternalBus
            };
            links.push(Link {
                id: format!("{}.bus.{}-{}", mc.id, suffix(&w[0]), suffix(&w[1])).into(),
                endpoints: (w[0].clone(), w[1].clone()),
                medium: bus,
                role,
            });
        }
        if let Some(t) = &target_el {
            let role = if mc.attach.mode == AttachMode::IabDirect && t.kind == ElementKind::Du && t.radio.is_some() {
                Some(LinkRole::BackhaulAir)
            } else if t.has_access_interface() {
                Some(LinkRole::AccessAir)
            } else {
                None
            };
            if let Some(role) = role {
                links.push(Link {
                    id: format!("{}.air", mc.id).into(),
                    endpoints: (target.clone(), proto.mt_id.clone()),
                    medium: Medium::Radio,
                    role,
                });
            }
        }
        let mut onboard_ids = chain.clone();
        onboard_ids.sort();
        mobile_cells.push(MobileCell { onboard_ids, access_id, ..proto });
    }

    Topology::from_parts(TopologyParts { networks, elements, links, mobile_cells })
}
