use serde::{Deserialize, Serialize};

use super::{AttachMode, ElementId, McId, MobileCellArch, Path, Topology, TopologyError};
use crate::protocol::ProcedureKind;

/// What a mobile cell has to run to come on air through a given target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttachmentPlan {
    pub mc: McId,
    pub target: ElementId,
    pub mode: AttachMode,
    /// Procedures in the order they must complete.
    pub procedures: Vec<ProcedureKind>,
    /// Element answering the MT's RRC messages.
    pub rrc_responder: ElementId,
    /// Core control plane answering registration and session requests.
    pub core_responder: ElementId,
    /// CU answering the F1 setup, if any.
    pub f1_responder: Option<ElementId>,
    pub path: Path,
}

pub fn attach_mobile_cell(
    topology: &Topology,
    mc: &McId,
    target: &ElementId,
    mode: AttachMode,
) -> Result<AttachmentPlan, TopologyError> {
    let cell = topology.mobile_cell(mc).ok_or_else(|| TopologyError::UnknownMobileCell(mc.0.clone()))?;
    let target_el = topology.element(target).ok_or_else(|| TopologyError::DanglingReference {
        referrer: format!("mobile cell `{mc}`"),
        missing: target.0.clone(),
    })?;
    if target_el.platform().is_some() {
        return Err(TopologyError::InvariantViolation(format!(
            "mobile cell `{mc}` cannot attach to `{target}` on another platform"
        )));
    }
    if !target_el.has_access_interface() {
        return Err(TopologyError::NoAirInterface { target: target.0.clone() });
    }
    if mode == AttachMode::IabDirect {
        if !cell.bap_capable {
            return Err(TopologyError::BapRequired { mc: mc.0.clone() });
        }
        if !topology.iab_forest().contains(target) {
            return Err(TopologyError::NotADonor { target: target.0.clone() });
        }
    }
    if cell.attachment.target != *target || cell.attachment.mode != mode {
        return Err(TopologyError::InvariantViolation(format!(
            "mobile cell `{mc}` is wired to `{}`, not `{target}`",
            cell.attachment.target
        )));
    }

    let rrc_responder =
        topology.rrc_terminus(target).ok_or_else(|| TopologyError::NoAirInterface { target: target.0.clone() })?;
    let core_responder =
        topology.network_info(&target_el.network).expect("every network has a core").core_control.clone();
    let (procedures, f1_responder) = match cell.arch {
        MobileCellArch::NoSplit => (vec![ProcedureKind::MtSession], None),
        _ => {
            let cu = topology.controller_of(&cell.du_id()).expect("DU has a controller").clone();
            (vec![ProcedureKind::MtSession, ProcedureKind::F1Setup], Some(cu))
        }
    };
    let path = topology.logical_path(mc)?;
    Ok(AttachmentPlan {
        mc: mc.clone(),
        target: target.clone(),
        mode,
        procedures,
        rrc_responder,
        core_responder,
        f1_responder,
        path,
    })
}
