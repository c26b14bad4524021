//! Control procedures: MT registration and PDU session, F1 setup, UE attach
//! and BAP routing inside IAB trees.

mod bap;
pub mod explore;
mod fsm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{ElementId, ElementKind};

pub use bap::{compute_bap_route, BapError, BapHop, BapRoute};
pub use fsm::{step_fsm, transition_rows, Action, Fsm, Input, ProcedureKind, ProcedureState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    RrcSetupRequest,
    RrcSetup,
    RrcReject,
    RegistrationRequest,
    RegistrationAccept,
    RegistrationReject,
    SessionEstabRequest,
    SessionEstabAccept,
    SessionEstabReject,
    F1SetupRequest,
    F1SetupResponse,
    F1SetupFailure,
}

impl MessageKind {
    pub const ALL: [MessageKind; 12] = [
        MessageKind::RrcSetupRequest,
        MessageKind::RrcSetup,
        MessageKind::RrcReject,
        MessageKind::RegistrationRequest,
        MessageKind::RegistrationAccept,
        MessageKind::RegistrationReject,
        MessageKind::SessionEstabRequest,
        MessageKind::SessionEstabAccept,
        MessageKind::SessionEstabReject,
        MessageKind::F1SetupRequest,
        MessageKind::F1SetupResponse,
        MessageKind::F1SetupFailure,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::RrcSetupRequest => "RrcSetupRequest",
            MessageKind::RrcSetup => "RrcSetup",
            MessageKind::RrcReject => "RrcReject",
            MessageKind::RegistrationRequest => "RegistrationRequest",
            MessageKind::RegistrationAccept => "RegistrationAccept",
            MessageKind::RegistrationReject => "RegistrationReject",
            MessageKind::SessionEstabRequest => "SessionEstabRequest",
            MessageKind::SessionEstabAccept => "SessionEstabAccept",
            MessageKind::SessionEstabReject => "SessionEstabReject",
            MessageKind::F1SetupRequest => "F1SetupRequest",
            MessageKind::F1SetupResponse => "F1SetupResponse",
            MessageKind::F1SetupFailure => "F1SetupFailure",
        }
    }

    pub fn is_request(self) -> bool {
        matches!(
            self,
            MessageKind::RrcSetupRequest
                | MessageKind::RegistrationRequest
                | MessageKind::SessionEstabRequest
                | MessageKind::F1SetupRequest
        )
    }

    /// Nominal encoded size. Control traffic is small next to link capacity;
    /// the size only feeds serialization delay.
    pub fn size_bytes(self) -> u32 {
        match self {
            MessageKind::RrcSetupRequest | MessageKind::RrcReject => 64,
            MessageKind::RrcSetup => 256,
            MessageKind::RegistrationRequest | MessageKind::RegistrationAccept => 320,
            MessageKind::RegistrationReject | MessageKind::SessionEstabReject => 96,
            MessageKind::SessionEstabRequest | MessageKind::SessionEstabAccept => 400,
            MessageKind::F1SetupRequest | MessageKind::F1SetupResponse => 1024,
            MessageKind::F1SetupFailure => 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlMessage {
    pub kind: MessageKind,
    pub src: ElementId,
    pub dst: ElementId,
    pub size_bytes: u32,
    /// Identifies the procedure run the message belongs to.
    pub correlation_id: u64,
}

impl ControlMessage {
    pub fn new(kind: MessageKind, src: ElementId, dst: ElementId, correlation_id: u64) -> Self {
        ControlMessage { kind, src, dst, size_bytes: kind.size_bytes(), correlation_id }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("{procedure} for `{element}` needs an active MT session first")]
    PrerequisiteMissing { procedure: &'static str, element: String },
}

/// Stateless answer of a network-side element to a request. `f1_authorized`
/// tells a CU whether it controls the requesting DU.
pub fn respond(request: MessageKind, responder: ElementKind, f1_authorized: bool) -> Option<MessageKind> {
    use ElementKind::*;
    use MessageKind::*;
    let reply = match request {
        RrcSetupRequest => match responder {
            Cu | MonolithicGnb => RrcSetup,
            _ => RrcReject,
        },
        RegistrationRequest => match responder {
            CoreControl => RegistrationAccept,
            _ => RegistrationReject,
        },
        SessionEstabRequest => match responder {
            CoreControl => SessionEstabAccept,
            _ => SessionEstabReject,
        },
        F1SetupRequest => match responder {
            Cu if f1_authorized => F1SetupResponse,
            _ => F1SetupFailure,
        },
        _ => return None,
    };
    Some(reply)
}
