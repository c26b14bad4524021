use std::collections::{BTreeMap, BTreeSet};
use std::path::Path as FsPath;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::latency::{message_latency, min_capacity, HopQuality};
use super::queue::EventQueue;
use super::trace::{TraceEvent, TraceLog, TraceRecord};
use crate::metrics::{
    coverage_fraction, outage_intervals, CoverageGrid, CoverageSample, CoverageServer, McSample, McSummary,
    MessageAccounting, MetricsBundle, UeQosRecord, UeServiceState, UeSummary,
};
use crate::mobility::{MobilityTrace, Position};
use crate::protocol::{
    respond, step_fsm, Action, ControlMessage, Fsm, Input, MessageKind, ProcedureKind, ProcedureState, ProtocolError,
};
use crate::radio::{link_state, LinkState, RadioModel, RadioParams};
use crate::scenario::{FaultAction, FaultSpec, ScenarioDescription, TimingConfig};
use crate::splits::{check_split_feasibility, Feasibility, SplitOption, SplitTable};
use crate::topology::{
    attach_mobile_cell, build_topology, AttachmentPlan, ElementId, ElementKind, Hop, LinkId, McId, Medium, NetworkId,
    Path, Placement, Topology, TopologyError,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("invalid run parameters: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone)]
enum Event {
    MobilitySample { k: u64 },
    LinkStateChange { link: LinkId, state: LinkState },
    MetricSample,
    Directive { index: usize },
    DeliverMessage { msg: u64 },
    TimerExpiry { proc_id: usize, timer: u64 },
    StartProcedure { proc_id: usize },
}

#[derive(Debug, Clone)]
struct RadioLinkRt {
    cell: ElementId,
    terminal: ElementId,
    state: LinkState,
    rx_dbm: f64,
    capacity_bps: f64,
}

#[derive(Debug, Clone)]
enum Owner {
    Mc(McId),
    Ue(ElementId),
}

#[derive(Debug, Clone)]
struct ProcRt {
    fsm: Fsm,
    owner: Owner,
    initiator: ElementId,
    corr: u64,
}

#[derive(Debug, Clone)]
struct McRt {
    plan: AttachmentPlan,
    mt_proc: usize,
    f1_proc: Option<usize>,
    f1_path: Option<Path>,
    air_link: Option<LinkId>,
    trace_id: String,
    retracted: bool,
    suppressed: bool,
    verdict: Option<Feasibility>,
    on_air: bool,
    on_air_since: Option<f64>,
    summary: McSummary,
}

#[derive(Debug, Clone)]
struct UeRt {
    network: NetworkId,
    radio: RadioParams,
    proc_id: usize,
    serving: Option<ElementId>,
    service: Option<UeServiceState>,
    samples: Vec<UeQosRecord>,
}

#[derive(Debug, Clone)]
struct InFlight {
    msg: ControlMessage,
    path: Path,
    proc_id: usize,
}

/// Trace and metrics of a finished run.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub trace: TraceLog,
    pub metrics: MetricsBundle,
}

impl SimOutput {
    /// Writes `trace.log`, `metrics.json` and `series/*.csv` under `dir`.
    pub fn write_to(&self, dir: &FsPath) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let f = std::io::BufWriter::new(std::fs::File::create(dir.join("trace.log"))?);
        self.trace.write_jsonl(f)?;
        std::fs::write(dir.join("metrics.json"), self.metrics.to_json())?;
        self.metrics.write_series(&dir.join("series"))
    }
}

struct GridRt {
    grid: CoverageGrid,
    rx: RadioParams,
    period_s: Option<f64>,
    next_s: f64,
}

pub struct Simulation {
    name: String,
    seed: u64,
    end_time_s: f64,
    sample_period_s: f64,
    timing: TimingConfig,
    topology: Topology,
    radio: RadioModel,
    splits: SplitTable,
    traces: BTreeMap<String, MobilityTrace>,
    faults: Vec<FaultSpec>,
    grid: Option<GridRt>,

    queue: EventQueue<Event>,
    now: f64,
    rng: ChaCha8Rng,
    radio_links: BTreeMap<LinkId, RadioLinkRt>,
    forced_down: BTreeSet<LinkId>,
    procs: Vec<ProcRt>,
    mcs: BTreeMap<McId, McRt>,
    ues: BTreeMap<ElementId, UeRt>,
    in_flight: BTreeMap<u64, InFlight>,
    next_msg: u64,
    next_corr: u64,
    accounting: MessageAccounting,
    log: TraceLog,
    coverage: Vec<CoverageSample>,
    started: bool,
}

impl Simulation {
    pub fn new(s: &ScenarioDescription) -> Result<Simulation, SimError> {
        let topology = build_topology(s)?;
        let mut sim = Simulation {
            name: s.metadata.name.clone(),
            seed: s.metadata.seed,
            end_time_s: s.metadata.end_time_s,
            sample_period_s: s.metadata.sample_period_s,
            timing: s.timing.clone(),
            radio: RadioModel {
                path_loss: s.radio.path_loss,
                max_spectral_efficiency: s.radio.max_spectral_efficiency,
            },
            splits: s.split_table(),
            traces: s.mobility_traces(),
            faults: s.faults.clone(),
            grid: s.grid.as_ref().map(|g| GridRt {
                grid: CoverageGrid::from_spec(g),
                rx: s.radio.profiles.get(&g.rx_profile).cloned().expect("validated grid profile"),
                period_s: g.sample_period_s,
                next_s: 0.0,
            }),
            queue: EventQueue::new(),
            now: 0.0,
            rng: ChaCha8Rng::seed_from_u64(s.metadata.seed),
            radio_links: BTreeMap::new(),
            forced_down: BTreeSet::new(),
            procs: Vec::new(),
            mcs: BTreeMap::new(),
            ues: BTreeMap::new(),
            in_flight: BTreeMap::new(),
            next_msg: 0,
            next_corr: 0,
            accounting: MessageAccounting::default(),
            log: TraceLog::default(),
            coverage: Vec::new(),
            started: false,
            topology,
        };
        if !(sim.sample_period_s > 0.0) {
            return Err(SimError::Invalid("sample_period_s must be > 0".into()));
        }

        for l in sim.topology.links() {
            if l.is_radio() {
                let (a, b) = &l.endpoints;
                let a_is_terminal = matches!(sim.topology.kind_of(a), Some(ElementKind::Mt | ElementKind::Ue));
                let (cell, terminal) = if a_is_terminal { (b.clone(), a.clone()) } else { (a.clone(), b.clone()) };
                sim.radio_links.insert(
                    l.id.clone(),
                    RadioLinkRt {
                        cell,
                        terminal,
                        state: LinkState::Down,
                        rx_dbm: f64::NEG_INFINITY,
                        capacity_bps: 0.0,
                    },
                );
            }
        }

        let mc_ids: Vec<McId> = sim.topology.mobile_cells().map(|m| m.id.clone()).collect();
        for id in mc_ids {
            let mc = sim.topology.mobile_cell(&id).expect("listed").clone();
            let plan = attach_mobile_cell(&sim.topology, &id, &mc.attachment.target, mc.attachment.mode)?;
            let max = sim.timing.max_retries;
            let mt_proc = sim.add_proc(ProcedureKind::MtSession, Owner::Mc(id.clone()), mc.mt_id.clone(), max);
            let f1_proc = plan
                .procedures
                .contains(&ProcedureKind::F1Setup)
                .then(|| sim.add_proc(ProcedureKind::F1Setup, Owner::Mc(id.clone()), mc.du_id(), max));
            let f1_path = sim.topology.f1_path(&id)?;
            let air_link = sim.topology.link_between(&mc.mt_id, &mc.attachment.target).map(|l| l.id.clone());
            let summary = McSummary { arch: mc.arch.label().to_string(), ..McSummary::default() };
            sim.mcs.insert(
                id,
                McRt {
                    plan,
                    mt_proc,
                    f1_proc,
                    f1_path,
                    air_link,
                    trace_id: mc.trace_id.clone(),
                    retracted: false,
                    suppressed: false,
                    verdict: None,
                    on_air: false,
                    on_air_since: None,
                    summary,
                },
            );
        }

        let ue_list: Vec<_> = sim
            .topology
            .elements()
            .filter(|e| e.kind == ElementKind::Ue)
            .map(|e| (e.id.clone(), e.network.clone(), e.radio.clone().expect("UE radio")))
            .collect();
        for (id, network, radio) in ue_list {
            let proc_id =
                sim.add_proc(ProcedureKind::UeAttach, Owner::Ue(id.clone()), id.clone(), sim.timing.max_retries);
            sim.ues.insert(id, UeRt { network, radio, proc_id, serving: None, service: None, samples: Vec::new() });
        }
        Ok(sim)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self
    }

    pub fn with_end_time(mut self, end_time_s: f64) -> Self {
        self.end_time_s = end_time_s;
        self
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    fn add_proc(&mut self, kind: ProcedureKind, owner: Owner, initiator: ElementId, max_retries: u32) -> usize {
        self.procs.push(ProcRt { fsm: Fsm::new(kind, max_retries), owner, initiator, corr: 0 });
        self.procs.len() - 1
    }

    pub fn procedure_state(&self, mc: &McId, kind: ProcedureKind) -> Option<ProcedureState> {
        let rt = self.mcs.get(mc)?;
        match kind {
            ProcedureKind::MtSession => Some(self.procs[rt.mt_proc].fsm.state),
            ProcedureKind::F1Setup => rt.f1_proc.map(|p| self.procs[p].fsm.state),
            ProcedureKind::UeAttach => None,
        }
    }

    /// Starts a mobile-cell procedure on demand. F1 setup needs an active MT
    /// session underneath it.
    pub fn start_procedure(&mut self, mc: &McId, kind: ProcedureKind) -> Result<(), ProtocolError> {
        let rt = self
            .mcs
            .get(mc)
            .ok_or_else(|| ProtocolError::PrerequisiteMissing { procedure: kind.as_str(), element: mc.0.clone() })?;
        let proc_id = match kind {
            ProcedureKind::MtSession => rt.mt_proc,
            ProcedureKind::F1Setup => {
                if self.procs[rt.mt_proc].fsm.state != ProcedureState::Active || rt.f1_proc.is_none() {
                    return Err(ProtocolError::PrerequisiteMissing { procedure: kind.as_str(), element: mc.0.clone() });
                }
                rt.f1_proc.expect("checked")
            }
            ProcedureKind::UeAttach => {
                return Err(ProtocolError::PrerequisiteMissing { procedure: kind.as_str(), element: mc.0.clone() })
            }
        };
        self.feed(proc_id, Input::Start);
        Ok(())
    }

    // ---- geometry and radio ----

    fn position_of(&self, id: &ElementId, t: f64) -> Option<Position> {
        match &self.topology.element(id)?.placement {
            Placement::Fixed(p) => Some(*p),
            Placement::Trace(tid) => self.traces.get(tid)?.position_at(t),
            Placement::Platform(mc) => {
                let rt = self.mcs.get(mc)?;
                if rt.retracted {
                    return None;
                }
                self.traces.get(&rt.trace_id)?.position_at(t)
            }
        }
    }

    fn pl0_override(&self, id: &ElementId) -> Option<f64> {
        let trace = match &self.topology.element(id)?.placement {
            Placement::Fixed(_) => return None,
            Placement::Trace(tid) => tid.clone(),
            Placement::Platform(mc) => self.mcs.get(mc)?.trace_id.clone(),
        };
        self.traces.get(&trace)?.pl0_db_override
    }

    /// Received power at `terminal` from `cell` now, if both are placed.
    fn air_rx(&self, cell: &ElementId, terminal: &ElementId) -> Option<f64> {
        let (pc, pt) = (self.position_of(cell, self.now)?, self.position_of(terminal, self.now)?);
        let tx = self.topology.element(cell)?.radio.as_ref()?;
        let rx = self.topology.element(terminal)?.radio.as_ref()?;
        let pl0 = self.pl0_override(cell).or_else(|| self.pl0_override(terminal));
        Some(self.radio.rx_dbm(tx, rx, pc.distance(&pt), pl0))
    }

    fn link_usable(&self, id: &LinkId) -> bool {
        if self.forced_down.contains(id) {
            return false;
        }
        match self.radio_links.get(id) {
            Some(rt) => rt.state == LinkState::Up,
            None => true,
        }
    }

    fn hop_quality(&self, h: &Hop) -> Option<HopQuality> {
        match h {
            Hop::Link(id) => {
                if self.forced_down.contains(id) {
                    return None;
                }
                match self.topology.link(id)?.medium {
                    Medium::Wired { one_way_latency_s, capacity_bps } => {
                        Some(HopQuality { propagation_s: one_way_latency_s, capacity_bps })
                    }
                    Medium::Radio => {
                        let rt = self.radio_links.get(id)?;
                        (rt.state == LinkState::Up && rt.capacity_bps > 0.0)
                            .then_some(HopQuality { propagation_s: 0.0, capacity_bps: rt.capacity_bps })
                    }
                }
            }
            Hop::Air { cell, terminal } => {
                let rx_dbm = self.air_rx(cell, terminal)?;
                let rx = self.topology.element(terminal)?.radio.as_ref()?;
                let cap = self.radio.capacity(rx_dbm, rx);
                (rx_dbm >= rx.sensitivity_dbm - rx.hysteresis_db && cap > 0.0)
                    .then_some(HopQuality { propagation_s: 0.0, capacity_bps: cap })
            }
        }
    }

    fn latency_of(&self, path: &Path, size_bytes: u32) -> Option<f64> {
        let proc_delay = &self.timing.processing_delay;
        message_latency(
            path,
            size_bytes,
            |h| self.hop_quality(h),
            |e| self.topology.kind_of(e).map(|k| proc_delay.for_kind(k)).unwrap_or(0.0),
        )
        .ok()
    }

    fn path_live(&self, path: &Path) -> bool {
        path.hops.iter().all(|h| self.hop_quality(h).is_some())
    }

    fn live_route(&self, from: &ElementId, goal: impl Fn(&ElementId) -> bool) -> Option<Path> {
        self.topology.fixed_route_where(from, goal, &BTreeSet::new(), |l| self.link_usable(l))
    }

    // ---- tracing ----

    fn record(&mut self, r: TraceRecord) {
        self.log.push(r);
    }

    fn rec(&self, event: TraceEvent, element: Option<&str>) -> TraceRecord {
        TraceRecord::new(self.now, event, element)
    }

    // ---- main loop ----

    pub fn run(mut self) -> SimOutput {
        self.schedule_initial();
        while let Some((t, _, ev)) = self.queue.pop() {
            // Messages still queued past the end stay in `in_flight` and count as pending.
            if t > self.end_time_s + 1e-9 {
                break;
            }
            debug_assert!(t >= self.now, "time went backwards");
            self.now = t;
            self.handle(ev);
        }
        self.finish()
    }

    fn schedule_initial(&mut self) {
        assert!(!self.started, "a simulation runs once");
        self.started = true;
        let mut order: Vec<usize> = (0..self.faults.len()).collect();
        order.sort_by(|&a, &b| self.faults[a].time_s.total_cmp(&self.faults[b].time_s));
        for i in order {
            if self.faults[i].time_s <= self.end_time_s {
                self.queue.push(self.faults[i].time_s, Event::Directive { index: i });
            }
        }
        self.queue.push(0.0, Event::MobilitySample { k: 0 });
    }

    fn handle(&mut self, ev: Event) {
        match ev {
            Event::MobilitySample { k } => self.on_mobility(k),
            Event::LinkStateChange { link, state } => self.on_link_change(link, state),
            Event::MetricSample => self.on_metric_sample(),
            Event::Directive { index } => self.on_directive(index),
            Event::DeliverMessage { msg } => self.on_deliver(msg),
            Event::TimerExpiry { proc_id, timer } => {
                if self.procs[proc_id].fsm.timer_id == Some(timer) {
                    self.feed(proc_id, Input::Timeout { timer });
                }
            }
            Event::StartProcedure { proc_id } => self.on_start_procedure(proc_id),
        }
    }

    fn on_mobility(&mut self, k: u64) {
        self.evaluate_radio_links();
        self.queue.push(self.now, Event::MetricSample);
        let next = (k + 1) as f64 * self.sample_period_s;
        if next <= self.end_time_s + 1e-9 {
            self.queue.push(next, Event::MobilitySample { k: k + 1 });
        }
    }

    fn evaluate_radio_links(&mut self) {
        let ids: Vec<LinkId> = self.radio_links.keys().cloned().collect();
        for id in ids {
            let rt = &self.radio_links[&id];
            let (cell, terminal, prev) = (rt.cell.clone(), rt.terminal.clone(), rt.state);
            let rx_params = self.topology.element(&terminal).and_then(|e| e.radio.clone()).expect("terminal radio");
            let (state, rx_dbm) = match self.air_rx(&cell, &terminal) {
                Some(rx) if !self.forced_down.contains(&id) => (link_state(rx, prev, &rx_params), rx),
                Some(rx) => (LinkState::Down, rx),
                None => (LinkState::Down, f64::NEG_INFINITY),
            };
            let capacity_bps = if rx_dbm.is_finite() { self.radio.capacity(rx_dbm, &rx_params) } else { 0.0 };
            let rt = self.radio_links.get_mut(&id).expect("listed");
            rt.state = state;
            rt.rx_dbm = rx_dbm;
            rt.capacity_bps = capacity_bps;
            if state != prev {
                self.queue.push(self.now, Event::LinkStateChange { link: id, state });
            }
        }
    }

    fn on_link_change(&mut self, link: LinkId, state: LinkState) {
        let mut r = self.rec(TraceEvent::Link, Some(link.as_str()));
        r.state_to = Some(state.as_str().to_string());
        if let Some(rt) = self.radio_links.get(&link) {
            if rt.rx_dbm.is_finite() {
                r.detail = Some(format!("rx_dbm={:.3}", rt.rx_dbm));
            }
        }
        self.record(r);
        let affected: Vec<McId> =
            self.mcs.iter().filter(|(_, m)| m.air_link.as_ref() == Some(&link)).map(|(id, _)| id.clone()).collect();
        for mc in affected {
            match state {
                LinkState::Down => {
                    let p = self.mcs[&mc].mt_proc;
                    self.feed(p, Input::LinkDown);
                }
                LinkState::Up => self.maybe_start_mt(&mc),
            }
        }
    }

    fn mc_deployed(&self, mc: &McId) -> bool {
        let rt = &self.mcs[mc];
        !rt.retracted && self.traces.get(&rt.trace_id).and_then(|t| t.position_at(self.now)).is_some()
    }

    fn maybe_start_mt(&mut self, mc: &McId) {
        let rt = &self.mcs[mc];
        if rt.suppressed || !self.mc_deployed(mc) {
            return;
        }
        if let Some(l) = &rt.air_link {
            if !self.link_usable(l) {
                return;
            }
        }
        let p = rt.mt_proc;
        if matches!(self.procs[p].fsm.state, ProcedureState::Idle | ProcedureState::Failed) {
            self.feed(p, Input::Start);
        }
    }

    fn on_directive(&mut self, index: usize) {
        let f = self.faults[index].clone();
        let mut r = self.rec(TraceEvent::Directive, Some(&f.target));
        r.detail = Some(f.action.as_str().to_string());
        self.record(r);
        let mc = McId(f.target.clone());
        match f.action {
            FaultAction::LinkDown => {
                let link = LinkId(f.target.clone());
                self.forced_down.insert(link.clone());
                match self.radio_links.get_mut(&link) {
                    Some(rt) if rt.state == LinkState::Up => {
                        rt.state = LinkState::Down;
                        self.queue.push(self.now, Event::LinkStateChange { link, state: LinkState::Down });
                    }
                    Some(_) => {}
                    None => {
                        self.queue.push(self.now, Event::LinkStateChange { link, state: LinkState::Down });
                    }
                }
            }
            FaultAction::LinkUp => {
                let link = LinkId(f.target.clone());
                if self.forced_down.remove(&link) {
                    if self.radio_links.contains_key(&link) {
                        self.evaluate_radio_links();
                    } else {
                        self.queue.push(self.now, Event::LinkStateChange { link, state: LinkState::Up });
                    }
                }
            }
            FaultAction::McRetract => {
                if let Some(rt) = self.mcs.get_mut(&mc) {
                    rt.retracted = true;
                    self.evaluate_radio_links();
                }
            }
            FaultAction::McDeploy => {
                if let Some(rt) = self.mcs.get_mut(&mc) {
                    rt.retracted = false;
                    rt.suppressed = false;
                    self.evaluate_radio_links();
                    self.maybe_start_mt(&mc);
                }
            }
            FaultAction::MtSessionFail => {
                if let Some(rt) = self.mcs.get_mut(&mc) {
                    rt.suppressed = true;
                    let p = rt.mt_proc;
                    self.feed(p, Input::Abort);
                }
            }
        }
    }

    fn on_start_procedure(&mut self, proc_id: usize) {
        let Owner::Mc(mc) = self.procs[proc_id].owner.clone() else {
            return;
        };
        let kind = self.procs[proc_id].fsm.kind;
        if let Err(e) = self.start_procedure(&mc, kind) {
            let mut r = self.rec(TraceEvent::Ignore, Some(self.procs[proc_id].initiator.as_str()));
            r.procedure = Some(kind.as_str().to_string());
            r.detail = Some(e.to_string());
            self.record(r);
        }
    }

    // ---- procedures ----

    fn feed(&mut self, proc_id: usize, input: Input) {
        let p = &self.procs[proc_id];
        let from = p.fsm.state;
        if input == Input::Start && matches!(from, ProcedureState::Idle | ProcedureState::Failed) {
            self.next_corr += 1;
            self.procs[proc_id].corr = self.next_corr;
        }
        let (next, actions) = step_fsm(&self.procs[proc_id].fsm, input);
        self.procs[proc_id].fsm = next;
        let p = &self.procs[proc_id];
        let (kind, initiator) = (p.fsm.kind, p.initiator.clone());
        if next.state != from {
            let mut r = self.rec(TraceEvent::Transition, Some(initiator.as_str()));
            r.procedure = Some(kind.as_str().to_string());
            r.state_from = Some(from.as_str().to_string());
            r.state_to = Some(next.state.as_str().to_string());
            self.record(r);
        }
        for a in actions {
            match a {
                Action::Send(m) => self.send_request(proc_id, m),
                Action::StartTimer { timer } => {
                    let at = self.now + self.timing.procedure_timeout_s;
                    self.queue.push(at, Event::TimerExpiry { proc_id, timer });
                }
                Action::CancelTimer => {}
                Action::NotifyEstablished => self.on_established(proc_id),
                Action::NotifyTornDown => self.on_torn_down(proc_id),
                Action::NotifyFailed => self.on_failed(proc_id),
                Action::LogIgnored => {
                    let mut r = self.rec(TraceEvent::Ignore, Some(initiator.as_str()));
                    r.procedure = Some(kind.as_str().to_string());
                    r.state_from = Some(from.as_str().to_string());
                    r.detail = Some(format!("{input:?}"));
                    self.record(r);
                }
            }
        }
    }

    fn on_established(&mut self, proc_id: usize) {
        let Owner::Mc(mc) = self.procs[proc_id].owner.clone() else {
            return;
        };
        if self.procs[proc_id].fsm.kind != ProcedureKind::MtSession {
            return;
        }
        let Some(f1) = self.mcs[&mc].f1_proc else {
            return;
        };
        let verdict = self.check_split(&mc);
        let feasible = verdict.is_feasible();
        let mut r = self.rec(TraceEvent::SplitCheck, Some(mc.as_str()));
        r.procedure = Some(ProcedureKind::F1Setup.as_str().to_string());
        r.state_to = Some(if feasible { "Feasible" } else { "Infeasible" }.to_string());
        r.detail = Some(verdict.summary());
        self.record(r);
        let rt = self.mcs.get_mut(&mc).expect("known MC");
        rt.summary.split_verdict = Some(verdict.summary());
        rt.verdict = Some(verdict);
        if feasible {
            // The MT tells the co-located DU over the onboard bus.
            let mt = self.procs[rt.mt_proc].initiator.clone();
            let du = self.procs[f1].initiator.clone();
            let notify = self
                .topology
                .link_between(&mt, &du)
                .map(|l| {
                    let mut p = Path::single(mt.clone());
                    p.push(Hop::Link(l.id.clone()), du.clone());
                    p
                })
                .and_then(|p| self.latency_of(&p, MessageKind::RrcSetupRequest.size_bytes()))
                .unwrap_or(self.timing.onboard_bus_latency_s)
                .max(f64::EPSILON * self.now.max(1.0) * 4.0);
            self.queue.push(self.now + notify, Event::StartProcedure { proc_id: f1 });
        }
    }

    /// Transport check of split option 2 over the mobile DU's F1 route.
    fn check_split(&self, mc: &McId) -> Feasibility {
        let rt = &self.mcs[mc];
        let user_rate = self.topology.mobile_cell(mc).map(|m| m.user_rate_bps).unwrap_or(0.0);
        let (latency, capacity) = match &rt.f1_path {
            Some(p) => (
                self.latency_of(p, self.timing.reference_packet_bytes).unwrap_or(f64::INFINITY),
                min_capacity(p, |h| self.hop_quality(h)).unwrap_or(0.0),
            ),
            None => (f64::INFINITY, 0.0),
        };
        check_split_feasibility(&self.splits, SplitOption::Option2, latency, capacity, user_rate)
            .unwrap_or_else(|_| Feasibility::Violations(Vec::new()))
    }

    fn on_torn_down(&mut self, proc_id: usize) {
        let Owner::Mc(mc) = self.procs[proc_id].owner.clone() else {
            return;
        };
        if self.procs[proc_id].fsm.kind != ProcedureKind::MtSession {
            return;
        }
        if let Some(f1) = self.mcs[&mc].f1_proc {
            let s = self.procs[f1].fsm.state;
            if s.is_established() {
                self.feed(f1, Input::LinkDown);
            } else if s.is_waiting() {
                self.feed(f1, Input::Abort);
            }
        }
    }

    fn on_failed(&mut self, proc_id: usize) {
        self.on_torn_down(proc_id);
    }

    // ---- messages ----

    fn request_target(&self, proc_id: usize, m: MessageKind) -> Option<ElementId> {
        let p = &self.procs[proc_id];
        match &p.owner {
            Owner::Mc(mc) => {
                let plan = &self.mcs[mc].plan;
                match m {
                    MessageKind::RrcSetupRequest => Some(plan.rrc_responder.clone()),
                    MessageKind::F1SetupRequest => plan.f1_responder.clone(),
                    _ => Some(plan.core_responder.clone()),
                }
            }
            Owner::Ue(ue) => {
                let serving = self.ues[ue].serving.clone()?;
                match m {
                    MessageKind::RrcSetupRequest => self.topology.rrc_terminus(&serving),
                    _ => self.topology.network_info(&self.ues[ue].network).map(|n| n.core_control.clone()),
                }
            }
        }
    }

    /// Route from the initiator of `proc_id` to `dst`.
    fn request_path(&self, proc_id: usize, m: MessageKind, dst: &ElementId) -> Option<Path> {
        let p = &self.procs[proc_id];
        match &p.owner {
            Owner::Mc(mc) => {
                let rt = &self.mcs[mc];
                if m == MessageKind::F1SetupRequest {
                    return rt.f1_path.clone().filter(|path| path.last() == dst);
                }
                let target = &rt.plan.target;
                let mut path = Path::single(p.initiator.clone());
                let hop = match self.topology.link_between(&p.initiator, target) {
                    Some(l) => Hop::Link(l.id.clone()),
                    None => Hop::Air { cell: target.clone(), terminal: p.initiator.clone() },
                };
                path.push(hop, target.clone());
                path.extend(self.live_route(target, |e| e == dst)?);
                Some(path)
            }
            Owner::Ue(ue) => {
                let serving = self.ues[ue].serving.clone()?;
                let mut path = Path::single(ue.clone());
                path.push(Hop::Air { cell: serving.clone(), terminal: ue.clone() }, serving.clone());
                path.extend(self.route_from_cell(&serving, dst)?);
                Some(path)
            }
        }
    }

    /// Route from a serving cell to `dst`, through the mobile cell's backhaul
    /// when the cell rides on one.
    fn route_from_cell(&self, cell: &ElementId, dst: &ElementId) -> Option<Path> {
        match self.topology.element(cell)?.platform() {
            Some(mc) => {
                let backhaul = self.topology.logical_path(mc).ok()?;
                if let Some(p) = backhaul.truncated_at(dst) {
                    return Some(p);
                }
                let mut p = backhaul;
                let tail = self.live_route(&p.last().clone(), |e| e == dst)?;
                p.extend(tail);
                Some(p)
            }
            None => self.live_route(cell, |e| e == dst),
        }
    }

    fn send_request(&mut self, proc_id: usize, m: MessageKind) {
        let src = self.procs[proc_id].initiator.clone();
        let corr = self.procs[proc_id].corr;
        let dst = self.request_target(proc_id, m);
        let path = dst.as_ref().and_then(|d| self.request_path(proc_id, m, d));
        let msg = ControlMessage::new(m, src.clone(), dst.unwrap_or_else(|| ElementId::from("")), corr);
        self.transmit(msg, path, proc_id);
    }

    fn transmit(&mut self, msg: ControlMessage, path: Option<Path>, proc_id: usize) {
        self.accounting.sent += 1;
        let id = self.next_msg;
        self.next_msg += 1;
        let mut r = self.rec(TraceEvent::Send, Some(msg.src.as_str()));
        r.message_kind = Some(msg.kind.as_str().to_string());
        r.detail = Some(format!("dst={} corr={} id={id}", msg.dst, msg.correlation_id));
        self.record(r);

        let Some(path) = path else {
            self.drop_message(&msg, id, "no_route".into());
            return;
        };
        let latency = match message_latency(
            &path,
            msg.size_bytes,
            |h| self.hop_quality(h),
            |e| self.topology.kind_of(e).map(|k| self.timing.processing_delay.for_kind(k)).unwrap_or(0.0),
        ) {
            Ok(l) => l,
            Err(e) => {
                self.drop_message(&msg, id, format!("link_down {e}"));
                return;
            }
        };
        let jitter = if self.timing.jitter_fraction > 0.0 {
            latency * self.timing.jitter_fraction * self.rng.random::<f64>()
        } else {
            0.0
        };
        self.in_flight.insert(id, InFlight { msg, path, proc_id });
        self.queue.push(self.now + latency + jitter, Event::DeliverMessage { msg: id });
    }

    fn drop_message(&mut self, msg: &ControlMessage, id: u64, reason: String) {
        self.accounting.dropped += 1;
        let key = reason.split_whitespace().next().unwrap_or_default().to_string();
        *self.accounting.drop_reasons.entry(key).or_default() += 1;
        let mut r = self.rec(TraceEvent::Drop, Some(msg.src.as_str()));
        r.message_kind = Some(msg.kind.as_str().to_string());
        r.detail = Some(format!("id={id} reason={reason}"));
        self.record(r);
    }

    fn on_deliver(&mut self, id: u64) {
        let Some(f) = self.in_flight.remove(&id) else {
            return;
        };
        self.accounting.delivered += 1;
        let mut r = self.rec(TraceEvent::Deliver, Some(f.msg.dst.as_str()));
        r.message_kind = Some(f.msg.kind.as_str().to_string());
        r.detail = Some(format!("src={} corr={} id={id}", f.msg.src, f.msg.correlation_id));
        self.record(r);

        if f.msg.kind.is_request() {
            let kind = self.topology.kind_of(&f.msg.dst).unwrap_or(ElementKind::Ue);
            let authorized = self.topology.controller_of(&f.msg.src) == Some(&f.msg.dst);
            if let Some(reply) = respond(f.msg.kind, kind, authorized) {
                let back = ControlMessage::new(reply, f.msg.dst.clone(), f.msg.src.clone(), f.msg.correlation_id);
                self.transmit(back, Some(f.path.reversed()), f.proc_id);
            }
            return;
        }
        if self.procs[f.proc_id].corr != f.msg.correlation_id {
            let mut r = self.rec(TraceEvent::Ignore, Some(f.msg.dst.as_str()));
            r.message_kind = Some(f.msg.kind.as_str().to_string());
            r.detail = Some("stale correlation id".into());
            self.record(r);
            return;
        }
        self.feed(f.proc_id, Input::Recv(f.msg.kind));
    }

    // ---- sampling ----

    fn fixed_cell_on_air(&self, cell: &ElementId) -> bool {
        let Some(e) = self.topology.element(cell) else {
            return false;
        };
        let net = e.network.clone();
        self.live_route(cell, |x| self.topology.is_upf_of(x, &net)).is_some()
    }

    fn mc_on_air(&self, mc: &McId) -> bool {
        let rt = &self.mcs[mc];
        if !self.mc_deployed(mc) || self.procs[rt.mt_proc].fsm.state != ProcedureState::Active {
            return false;
        }
        if let Some(f1) = rt.f1_proc {
            if self.procs[f1].fsm.state != ProcedureState::Operational {
                return false;
            }
        }
        self.topology.logical_path(mc).map(|p| self.path_live(&p)).unwrap_or(false)
    }

    /// Access cells currently on air, with their network.
    fn on_air_cells(&self) -> Vec<(ElementId, NetworkId)> {
        self.topology
            .access_cells()
            .filter(|e| match e.platform() {
                Some(mc) => self.mcs[mc].on_air,
                None => self.fixed_cell_on_air(&e.id),
            })
            .map(|e| (e.id.clone(), e.network.clone()))
            .collect()
    }

    fn backhaul_to_home(&self, cell: &ElementId) -> Option<Path> {
        match self.topology.element(cell)?.platform() {
            Some(mc) => self.topology.logical_path(mc).ok(),
            None => {
                let home = self.topology.home_network().clone();
                self.live_route(cell, |e| self.topology.is_upf_of(e, &home))
            }
        }
    }

    fn on_metric_sample(&mut self) {
        let t = self.now;
        let mut r = self.rec(TraceEvent::MetricSample, None);

        let mc_ids: Vec<McId> = self.mcs.keys().cloned().collect();
        for mc in &mc_ids {
            let on = self.mc_on_air(mc);
            let rt = self.mcs.get_mut(mc).expect("known MC");
            if on != rt.on_air {
                rt.on_air = on;
                if on {
                    rt.on_air_since = Some(t);
                    rt.summary.first_on_air_s.get_or_insert(t);
                } else if let Some(since) = rt.on_air_since.take() {
                    rt.summary.on_air_time_s += t - since;
                }
                let mut cr = self.rec(TraceEvent::CellState, Some(mc.as_str()));
                cr.state_to = Some(if on { "OnAir" } else { "OffAir" }.to_string());
                self.log.push(cr);
            }
        }
        let on_air = self.on_air_cells();

        if let Some(g) = &self.grid {
            let due = t + 1e-9 >= g.next_s;
            if due {
                let home = self.topology.home_network().clone();
                let servers: Vec<CoverageServer> = on_air
                    .iter()
                    .filter(|(_, n)| *n == home)
                    .filter_map(|(id, _)| {
                        Some(CoverageServer {
                            id: id.0.clone(),
                            position: self.position_of(id, t)?,
                            tx: self.topology.element(id)?.radio.clone()?,
                            pl0_override: self.pl0_override(id),
                        })
                    })
                    .collect();
                let fraction = coverage_fraction(&g.grid, &servers, &g.rx, &self.radio);
                self.coverage.push(CoverageSample { time_s: t, fraction });
                r.detail = Some(format!("coverage={fraction}"));
                let g = self.grid.as_mut().expect("grid present");
                g.next_s = match g.period_s {
                    Some(p) => g.next_s + p,
                    None => t,
                };
            }
        }
        self.log.push(r);

        let ue_ids: Vec<ElementId> = self.ues.keys().cloned().collect();
        for ue in ue_ids {
            self.sample_ue(&ue, &on_air);
        }

        for mc in &mc_ids {
            let rt = &self.mcs[mc];
            let path = self.topology.logical_path(mc).ok();
            let latency = path.as_ref().and_then(|p| self.latency_of(p, self.timing.reference_packet_bytes));
            let capacity = path.as_ref().and_then(|p| min_capacity(p, |h| self.hop_quality(h))).unwrap_or(0.0);
            let sample = McSample {
                time_s: t,
                on_air: rt.on_air,
                mt_state: self.procs[rt.mt_proc].fsm.state.as_str().to_string(),
                f1_state: rt.f1_proc.map(|p| self.procs[p].fsm.state.as_str().to_string()),
                backhaul_latency_s: latency,
                backhaul_capacity_bps: if capacity.is_finite() { capacity } else { 0.0 },
            };
            self.mcs.get_mut(mc).expect("known MC").summary.samples.push(sample);
        }
    }

    fn sample_ue(&mut self, ue: &ElementId, on_air: &[(ElementId, NetworkId)]) {
        let t = self.now;
        let rt = &self.ues[ue];
        let (net, sens, hyst) = (rt.network.clone(), rt.radio.sensitivity_dbm, rt.radio.hysteresis_db);
        let mut best: Option<(ElementId, f64)> = None;
        let mut current_rx = None;
        for (cell, n) in on_air {
            if *n != net {
                continue;
            }
            let Some(rx) = self.air_rx(cell, ue) else { continue };
            if Some(cell) == rt.serving.as_ref() {
                current_rx = Some(rx);
            }
            if rx < sens {
                continue;
            }
            best = match best {
                Some((id, b)) if b >= rx => Some((id, b)),
                _ => Some((cell.clone(), rx)),
            };
        }
        let keep_current = match (current_rx, &best) {
            (Some(cur), Some((_, b))) => cur >= sens - hyst && *b <= cur + hyst,
            (Some(cur), None) => cur >= sens - hyst,
            (None, _) => false,
        };
        let choice = if keep_current { rt.serving.clone() } else { best.map(|(id, _)| id) };
        let proc_id = rt.proc_id;

        if choice != rt.serving {
            self.ues.get_mut(ue).expect("known UE").serving = choice.clone();
            let p = &mut self.procs[proc_id];
            let from = p.fsm.state;
            p.fsm = Fsm::new(ProcedureKind::UeAttach, p.fsm.max_retries);
            if from != ProcedureState::Idle {
                let mut r = self.rec(TraceEvent::Transition, Some(ue.as_str()));
                r.procedure = Some(ProcedureKind::UeAttach.as_str().to_string());
                r.state_from = Some(from.as_str().to_string());
                r.state_to = Some(ProcedureState::Idle.as_str().to_string());
                r.detail = Some("serving cell changed".into());
                self.record(r);
            }
            if choice.is_some() {
                self.feed(proc_id, Input::Start);
            }
        } else if choice.is_some()
            && matches!(self.procs[proc_id].fsm.state, ProcedureState::Idle | ProcedureState::Failed)
        {
            self.feed(proc_id, Input::Start);
        }

        let rt = &self.ues[ue];
        let connected = rt.serving.is_some() && self.procs[proc_id].fsm.state == ProcedureState::Connected;
        let state = if connected { UeServiceState::Connected } else { UeServiceState::Outage };
        let (latency, throughput) = match (&rt.serving, connected) {
            (Some(cell), true) => {
                let mut path = Path::single(ue.clone());
                path.push(Hop::Air { cell: cell.clone(), terminal: ue.clone() }, cell.clone());
                match self.backhaul_to_home(cell) {
                    Some(tail) => {
                        path.extend(tail);
                        let cap = min_capacity(&path, |h| self.hop_quality(h)).unwrap_or(0.0);
                        (self.latency_of(&path, self.timing.reference_packet_bytes), cap)
                    }
                    None => (None, 0.0),
                }
            }
            _ => (None, 0.0),
        };
        let record = UeQosRecord {
            ue_id: ue.0.clone(),
            time_s: t,
            serving_cell: rt.serving.as_ref().map(|c| c.0.clone()),
            e2e_latency_s: latency,
            throughput_bps: throughput,
            state,
        };
        let changed = rt.service != Some(state);
        let rt = self.ues.get_mut(ue).expect("known UE");
        rt.samples.push(record);
        rt.service = Some(state);
        if changed {
            let mut r = self.rec(TraceEvent::UeService, Some(ue.as_str()));
            r.state_to = Some(state.as_str().to_string());
            r.detail = self.ues[ue].serving.as_ref().map(|c| format!("serving={c}"));
            self.record(r);
        }
    }

    fn finish(mut self) -> SimOutput {
        let end = self.log.last_sample_time().unwrap_or(0.0);
        self.accounting.pending = self.in_flight.len() as u64;
        let mut bundle = MetricsBundle {
            scenario: self.name.clone(),
            seed: self.seed,
            end_time_s: self.end_time_s,
            coverage: std::mem::take(&mut self.coverage),
            messages: self.accounting.clone(),
            ..MetricsBundle::default()
        };
        for (id, rt) in std::mem::take(&mut self.mcs) {
            let mut summary = rt.summary;
            if let Some(since) = rt.on_air_since {
                summary.on_air_time_s += end - since;
            }
            bundle.mobile_cells.insert(id.0, summary);
        }
        for (id, rt) in std::mem::take(&mut self.ues) {
            let intervals = outage_intervals(&self.log, id.as_str()).unwrap_or_default();
            let outage: f64 = intervals.iter().map(|(a, b)| b - a).sum();
            let first = rt.samples.first().map(|s| s.time_s).unwrap_or(end);
            bundle.ues.insert(
                id.0,
                UeSummary {
                    samples: rt.samples,
                    outage_total_s: outage,
                    connected_total_s: (end - first) - outage,
                    outage_intervals: intervals,
                },
            );
        }
        SimOutput { trace: self.log, metrics: bundle }
    }
}

/// Builds and runs a scenario with optional seed and end-time overrides.
pub fn run_scenario(
    s: &ScenarioDescription,
    seed: Option<u64>,
    end_time_s: Option<f64>,
) -> Result<SimOutput, SimError> {
    let mut sim = Simulation::new(s)?;
    if let Some(seed) = seed {
        sim = sim.with_seed(seed);
    }
    if let Some(end) = end_time_s {
        if !(end > 0.0) {
            return Err(SimError::Invalid("end time must be > 0".into()));
        }
        sim = sim.with_end_time(end);
    }
    Ok(sim.run())
}
