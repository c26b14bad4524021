//! Exhaustive exploration of initiator/responder runs under every message
//! ordering, optional single message loss and arbitrary timer firing.

use std::collections::{BTreeSet, HashMap};

use super::{respond, step_fsm, Action, Fsm, Input, MessageKind, ProcedureKind, ProcedureState};
use crate::topology::ElementKind;

#[derive(Debug, Clone)]
pub struct ExploreConfig {
    /// Procedures run in sequence: each starts only once its predecessor is
    /// established.
    pub chain: Vec<ProcedureKind>,
    pub max_retries: u32,
    pub max_losses: u8,
}

#[derive(Debug, Clone, Default)]
pub struct ExploreReport {
    pub states: usize,
    pub terminal_states: usize,
    pub deadlocks: Vec<String>,
    pub cycles: usize,
    pub violations: Vec<String>,
    /// Messages exchanged on terminal runs without loss or timeout.
    pub loss_free_message_counts: BTreeSet<u32>,
    pub terminal_outcomes: BTreeSet<Vec<ProcedureState>>,
}

impl ExploreReport {
    pub fn is_sound(&self) -> bool {
        self.deadlocks.is_empty() && self.cycles == 0 && self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct State {
    fsms: Vec<Fsm>,
    /// `(procedure index, message)`, kept sorted: a multiset.
    in_flight: Vec<(usize, MessageKind)>,
    accepted: Vec<Vec<MessageKind>>,
    losses: u8,
    sent: u32,
    lossy: bool,
    timed_out: bool,
}

fn forward_chain(kind: ProcedureKind) -> &'static [MessageKind] {
    use MessageKind::*;
    match kind {
        ProcedureKind::MtSession => &[RrcSetup, RegistrationAccept, SessionEstabAccept],
        ProcedureKind::F1Setup => &[F1SetupResponse],
        ProcedureKind::UeAttach => &[RrcSetup, SessionEstabAccept],
    }
}

fn responder_for(m: MessageKind) -> ElementKind {
    match m {
        MessageKind::RegistrationRequest | MessageKind::SessionEstabRequest => ElementKind::CoreControl,
        _ => ElementKind::Cu,
    }
}

struct Explorer<'a> {
    cfg: &'a ExploreConfig,
    violations: Vec<String>,
}

impl Explorer<'_> {
    fn apply(&mut self, st: &mut State, i: usize, input: Input) {
        let (next, actions) = step_fsm(&st.fsms[i], input);
        let was = st.fsms[i].state;
        st.fsms[i] = next;
        if let Input::Recv(m) = input {
            if next.state != was && forward_chain(next.kind).contains(&m) {
                st.accepted[i].push(m);
            }
        }
        for a in actions {
            match a {
                Action::Send(m) => {
                    if m == MessageKind::F1SetupRequest {
                        let mt_active = st
                            .fsms
                            .iter()
                            .any(|f| f.kind == ProcedureKind::MtSession && f.state == ProcedureState::Active);
                        let has_mt = st.fsms.iter().any(|f| f.kind == ProcedureKind::MtSession);
                        if has_mt && !mt_active {
                            self.violations.push("F1SetupRequest sent before MT session Active".into());
                        }
                    }
                    st.in_flight.push((i, m));
                    st.in_flight.sort();
                    st.sent += 1;
                }
                Action::NotifyEstablished => {
                    let expect = forward_chain(next.kind);
                    if st.accepted[i] != expect {
                        self.violations.push(format!(
                            "{:?} established after accepts {:?}, expected {:?}",
                            next.kind, st.accepted[i], expect
                        ));
                    }
                }
                _ => {}
            }
        }
    }

    fn successors(&mut self, st: &State) -> Vec<State> {
        let mut out = Vec::new();
        // Chained starts.
        for i in 1..st.fsms.len() {
            if st.fsms[i].state == ProcedureState::Idle && st.fsms[i - 1].state.is_established() {
                let mut n = st.clone();
                self.apply(&mut n, i, Input::Start);
                out.push(n);
            }
        }
        let mut seen = BTreeSet::new();
        for (k, &(i, m)) in st.in_flight.iter().enumerate() {
            if !seen.insert((i, m)) {
                continue;
            }
            let mut n = st.clone();
            n.in_flight.remove(k);
            if m.is_request() {
                if let Some(reply) = respond(m, responder_for(m), true) {
                    n.in_flight.push((i, reply));
                    n.in_flight.sort();
                    n.sent += 1;
                }
            } else {
                self.apply(&mut n, i, Input::Recv(m));
            }
            out.push(n);
            if st.losses < self.cfg.max_losses {
                let mut n = st.clone();
                n.in_flight.remove(k);
                n.losses += 1;
                n.lossy = true;
                out.push(n);
            }
        }
        for (i, f) in st.fsms.iter().enumerate() {
            if let Some(timer) = f.timer_id {
                let mut n = st.clone();
                n.timed_out = true;
                self.apply(&mut n, i, Input::Timeout { timer });
                out.push(n);
            }
        }
        out
    }
}

pub fn explore(cfg: &ExploreConfig) -> ExploreReport {
    let mut ex = Explorer { cfg, violations: Vec::new() };
    let mut init = State {
        fsms: cfg.chain.iter().map(|&k| Fsm::new(k, cfg.max_retries)).collect(),
        in_flight: Vec::new(),
        accepted: vec![Vec::new(); cfg.chain.len()],
        losses: 0,
        sent: 0,
        lossy: false,
        timed_out: false,
    };
    if !cfg.chain.is_empty() {
        ex.apply(&mut init, 0, Input::Start);
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        OnStack,
        Done,
    }
    let mut color: HashMap<State, Color> = HashMap::new();
    let mut report = ExploreReport::default();
    let mut stack: Vec<(State, Vec<State>)> = Vec::new();
    let succ = ex.successors(&init);
    color.insert(init.clone(), Color::OnStack);
    stack.push((init, succ));

    while let Some((_, pending)) = stack.last_mut() {
        match pending.pop() {
            Some(next) => match color.get(&next) {
                Some(Color::OnStack) => report.cycles += 1,
                Some(Color::Done) => {}
                None => {
                    let succ = ex.successors(&next);
                    color.insert(next.clone(), Color::OnStack);
                    stack.push((next, succ));
                }
            },
            None => {
                let (st, _) = stack.pop().expect("non-empty stack");
                let terminal = ex.successors(&st).is_empty();
                if terminal {
                    report.terminal_states += 1;
                    check_terminal(&st, &mut report);
                }
                color.insert(st, Color::Done);
            }
        }
    }
    report.states = color.len();
    report.violations.extend(ex.violations);
    report.violations.sort();
    report.violations.dedup();
    report
}

fn check_terminal(st: &State, report: &mut ExploreReport) {
    let outcome: Vec<_> = st.fsms.iter().map(|f| f.state).collect();
    let mut stuck = st.fsms.iter().any(|f| f.state.is_waiting());
    for w in st.fsms.windows(2) {
        if w[0].state.is_established() && w[1].state == ProcedureState::Idle {
            stuck = true;
        }
    }
    if stuck {
        report.deadlocks.push(format!("{outcome:?}"));
    }
    if !st.lossy && !st.timed_out {
        report.loss_free_message_counts.insert(st.sent);
    }
    report.terminal_outcomes.insert(outcome);
}
