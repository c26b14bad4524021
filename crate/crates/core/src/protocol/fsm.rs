//! Control-procedure state machines driven by a single static transition table.

use serde::{Deserialize, Serialize};

use super::MessageKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProcedureKind {
    MtSession,
    F1Setup,
    UeAttach,
}

impl ProcedureKind {
    pub const ALL: [ProcedureKind; 3] = [ProcedureKind::MtSession, ProcedureKind::F1Setup, ProcedureKind::UeAttach];

    pub fn as_str(self) -> &'static str {
        match self {
            ProcedureKind::MtSession => "MtSession",
            ProcedureKind::F1Setup => "F1Setup",
            ProcedureKind::UeAttach => "UeAttach",
        }
    }

    /// Every state the procedure can be in.
    pub fn states(self) -> &'static [ProcedureState] {
        use ProcedureState::*;
        match self {
            ProcedureKind::MtSession => &[Idle, RrcConnecting, Registering, SessionRequesting, Active, Failed],
            ProcedureKind::F1Setup => &[Idle, SetupRequested, Operational, Failed],
            ProcedureKind::UeAttach => &[Idle, RrcConnecting, SessionRequesting, Connected, Failed],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProcedureState {
    Idle,
    RrcConnecting,
    Registering,
    SessionRequesting,
    Active,
    SetupRequested,
    Operational,
    Connected,
    Failed,
}

impl ProcedureState {
    pub fn as_str(self) -> &'static str {
        match self {
            ProcedureState::Idle => "Idle",
            ProcedureState::RrcConnecting => "RrcConnecting",
            ProcedureState::Registering => "Registering",
            ProcedureState::SessionRequesting => "SessionRequesting",
            ProcedureState::Active => "Active",
            ProcedureState::SetupRequested => "SetupRequested",
            ProcedureState::Operational => "Operational",
            ProcedureState::Connected => "Connected",
            ProcedureState::Failed => "Failed",
        }
    }

    pub fn is_established(self) -> bool {
        matches!(self, ProcedureState::Active | ProcedureState::Operational | ProcedureState::Connected)
    }

    /// Waiting for a response with a timer armed.
    pub fn is_waiting(self) -> bool {
        matches!(
            self,
            ProcedureState::RrcConnecting
                | ProcedureState::Registering
                | ProcedureState::SessionRequesting
                | ProcedureState::SetupRequested
        )
    }

    /// The request (re)sent while in this waiting state.
    pub fn stage_request(self) -> Option<MessageKind> {
        match self {
            ProcedureState::RrcConnecting => Some(MessageKind::RrcSetupRequest),
            ProcedureState::Registering => Some(MessageKind::RegistrationRequest),
            ProcedureState::SessionRequesting => Some(MessageKind::SessionEstabRequest),
            ProcedureState::SetupRequested => Some(MessageKind::F1SetupRequest),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Input {
    /// Engine command to begin (or restart after failure).
    Start,
    Recv(MessageKind),
    Timeout {
        timer: u64,
    },
    LinkDown,
    /// Forced failure (scenario fault injection).
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Send(MessageKind),
    StartTimer {
        timer: u64,
    },
    CancelTimer,
    /// Tell the engine the procedure reached its established state.
    NotifyEstablished,
    /// Tell the engine an established procedure was torn down.
    NotifyTornDown,
    NotifyFailed,
    LogIgnored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum On {
    Start,
    Recv(MessageKind),
}

#[derive(Debug, Clone, Copy)]
struct Row {
    kind: ProcedureKind,
    from: ProcedureState,
    on: On,
    to: ProcedureState,
}

use MessageKind as M;
use ProcedureKind as K;
use ProcedureState as S;

/// Forward and reject transitions. Timeouts, link loss and aborts are
/// uniform across procedures and handled in [`step_fsm`].
const TABLE: &[Row] = &[
    Row { kind: K::MtSession, from: S::Idle, on: On::Start, to: S::RrcConnecting },
    Row { kind: K::MtSession, from: S::Failed, on: On::Start, to: S::RrcConnecting },
    Row { kind: K::MtSession, from: S::RrcConnecting, on: On::Recv(M::RrcSetup), to: S::Registering },
    Row { kind: K::MtSession, from: S::RrcConnecting, on: On::Recv(M::RrcReject), to: S::Failed },
    Row { kind: K::MtSession, from: S::Registering, on: On::Recv(M::RegistrationAccept), to: S::SessionRequesting },
    Row { kind: K::MtSession, from: S::Registering, on: On::Recv(M::RegistrationReject), to: S::Failed },
    Row { kind: K::MtSession, from: S::SessionRequesting, on: On::Recv(M::SessionEstabAccept), to: S::Active },
    Row { kind: K::MtSession, from: S::SessionRequesting, on: On::Recv(M::SessionEstabReject), to: S::Failed },
    Row { kind: K::F1Setup, from: S::Idle, on: On::Start, to: S::SetupRequested },
    Row { kind: K::F1Setup, from: S::Failed, on: On::Start, to: S::SetupRequested },
    Row { kind: K::F1Setup, from: S::SetupRequested, on: On::Recv(M::F1SetupResponse), to: S::Operational },
    Row { kind: K::F1Setup, from: S::SetupRequested, on: On::Recv(M::F1SetupFailure), to: S::Failed },
    Row { kind: K::UeAttach, from: S::Idle, on: On::Start, to: S::RrcConnecting },
    Row { kind: K::UeAttach, from: S::Failed, on: On::Start, to: S::RrcConnecting },
    Row { kind: K::UeAttach, from: S::RrcConnecting, on: On::Recv(M::RrcSetup), to: S::SessionRequesting },
    Row { kind: K::UeAttach, from: S::RrcConnecting, on: On::Recv(M::RrcReject), to: S::Failed },
    Row { kind: K::UeAttach, from: S::SessionRequesting, on: On::Recv(M::SessionEstabAccept), to: S::Connected },
    Row { kind: K::UeAttach, from: S::SessionRequesting, on: On::Recv(M::SessionEstabReject), to: S::Failed },
];

/// One procedure instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fsm {
    pub kind: ProcedureKind,
    pub state: ProcedureState,
    pub retry_count: u32,
    pub max_retries: u32,
    /// Id of the armed timer; expiries carrying any other id are stale.
    pub timer_id: Option<u64>,
    next_timer: u64,
}

impl Fsm {
    pub fn new(kind: ProcedureKind, max_retries: u32) -> Fsm {
        Fsm { kind, state: ProcedureState::Idle, retry_count: 0, max_retries, timer_id: None, next_timer: 0 }
    }

    fn arm(&mut self, actions: &mut Vec<Action>) {
        self.next_timer += 1;
        self.timer_id = Some(self.next_timer);
        actions.push(Action::StartTimer { timer: self.next_timer });
    }

    fn disarm(&mut self, actions: &mut Vec<Action>) {
        if self.timer_id.take().is_some() {
            actions.push(Action::CancelTimer);
        }
    }
}

fn lookup(kind: ProcedureKind, from: ProcedureState, on: On) -> Option<ProcedureState> {
    TABLE.iter().find(|r| r.kind == kind && r.from == from && r.on == on).map(|r| r.to)
}

/// Pure transition: returns the next instance state and the actions the
/// engine must carry out. Unknown inputs leave the state unchanged.
pub fn step_fsm(fsm: &Fsm, input: Input) -> (Fsm, Vec<Action>) {
    let mut next = *fsm;
    let mut actions = Vec::new();
    let from = fsm.state;
    let table_input = match input {
        Input::Start => Some(On::Start),
        Input::Recv(m) => Some(On::Recv(m)),
        _ => None,
    };

    if let Some(on) = table_input {
        match lookup(fsm.kind, from, on) {
            Some(to) => {
                next.disarm(&mut actions);
                next.state = to;
                next.retry_count = 0;
                if let Some(req) = to.stage_request() {
                    actions.push(Action::Send(req));
                    next.arm(&mut actions);
                } else if to.is_established() {
                    actions.push(Action::NotifyEstablished);
                } else if to == ProcedureState::Failed {
                    actions.push(Action::NotifyFailed);
                }
            }
            None => actions.push(Action::LogIgnored),
        }
        return (next, actions);
    }

    match input {
        Input::Timeout { timer } if from.is_waiting() && fsm.timer_id == Some(timer) => {
            next.timer_id = None;
            if fsm.retry_count < fsm.max_retries {
                next.retry_count += 1;
                actions.push(Action::Send(from.stage_request().expect("waiting state has a request")));
                next.arm(&mut actions);
            } else {
                next.state = ProcedureState::Failed;
                next.retry_count = 0;
                actions.push(Action::NotifyFailed);
            }
        }
        Input::LinkDown if from.is_established() => {
            next.state = ProcedureState::Idle;
            actions.push(Action::NotifyTornDown);
        }
        Input::Abort if from != ProcedureState::Failed => {
            next.disarm(&mut actions);
            next.state = ProcedureState::Failed;
            next.retry_count = 0;
            if from.is_established() {
                actions.push(Action::NotifyTornDown);
            }
            actions.push(Action::NotifyFailed);
        }
        _ => actions.push(Action::LogIgnored),
    }
    (next, actions)
}

/// Rows of the transition table, for inspection and documentation.
pub fn transition_rows() -> impl Iterator<Item = (ProcedureKind, ProcedureState, Option<MessageKind>, ProcedureState)> {
    TABLE.iter().map(|r| {
        let msg = match r.on {
            On::Start => None,
            On::Recv(m) => Some(m),
        };
        (r.kind, r.from, msg, r.to)
    })
}
