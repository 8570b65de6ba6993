//! The discrete-event engine: node runtime state, data-plane pipelines,
//! PU preemption, metrics collection and the PU-safety audit.
//!
//! Coexistence rule enforced throughout: a single node transmits data
//! only while outside every active PU's interference range; a
//! cooperative group transmits anywhere, but its weights are recomputed
//! at transmission start against the currently active in-range PUs and
//! must satisfy the null constraint.  A PU activating mid-transmission
//! destroys every unprotected transmission it overhears.

use crate::beam::{capacity_coop, capacity_p2p, compute_null_weights, BeamError, ChannelMatrix, NULL_TOL};
use crate::geometry::Position;
use crate::metric::{LinkCandidate, ThresholdTable};
use crate::protocol::baselines::{flood_discover, greedy_next_hop, GreedyNeighbor};
use crate::protocol::hello::{HelloPacket, NeighborState};
use crate::protocol::undercover::{
    handle_rreq, select_next_hop, Ack, AckReply, ChannelLookup, RouteReply, RouteRequest,
    RreqOutcome, RreqView,
};
use crate::scenario::{ConfigError, Protocol, RouteReuse, ScenarioConfig};
use crate::sim::event::{ArrivedPacket, CtrlPacket, EventKind, EventQueue, PacketId, TxId};
use crate::sim::field::ChannelField;
use crate::sim::metrics::MetricsReport;
use crate::sim::pu::{sample_pu_schedule, PuProcess};
use crate::sim::trace::TraceEvent;
use crate::{FlowId, NodeId, PuId};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Warm-up fraction of the horizon excluded from metrics.
const WARMUP_FRACTION: f64 = 0.1;
/// Nearest-neighbor cap on the grouping pool.
const MAX_ENUM_NEIGHBORS: usize = 12;
/// Below this link rate a transmission is deferred to the next
/// coherence interval instead of being scheduled.
const MIN_RATE_BPS: f64 = 1.0;
/// A node counts as flow-carrying while it handled flow data within
/// this many hello periods.
const CARRIER_WINDOW_PERIODS: f64 = 2.0;

/// Per-flow packet accounting: every generated packet is eventually
/// delivered, dropped, or still in flight at the horizon.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlowCounts {
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
}

/// Post-hoc verification that no data transmission overlapped an active
/// PU's interference disk without a verified null.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub data_transmissions: u64,
    pub violations: u64,
    pub max_null_residual: f64,
}

/// Everything one simulation run produces.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub report: MetricsReport,
    pub audit: AuditReport,
    pub flow_counts: BTreeMap<FlowId, FlowCounts>,
    pub trace: Vec<TraceEvent>,
}

/// Run one scenario to its horizon.  Identical config and seed produce a
/// bit-identical report.
pub fn run(cfg: &ScenarioConfig) -> Result<MetricsReport, ConfigError> {
    run_full(cfg, false).map(|out| out.report)
}

/// Run one scenario, optionally collecting the event trace.
pub fn run_full(cfg: &ScenarioConfig, want_trace: bool) -> Result<SimOutput, ConfigError> {
    cfg.validate()?;
    let mut table_rng = ChaCha12Rng::seed_from_u64(cfg.table_seed);
    let table = ThresholdTable::generate(
        &cfg.channel_model(),
        &cfg.radio(),
        cfg.table_max_size,
        cfg.table_max_pus,
        cfg.table_samples,
        &mut table_rng,
    );
    run_with_table(cfg, &table, want_trace)
}

/// Run one scenario against a pre-generated threshold table (sweeps
/// share one table across replications).
pub fn run_with_table(
    cfg: &ScenarioConfig,
    table: &ThresholdTable,
    want_trace: bool,
) -> Result<SimOutput, ConfigError> {
    cfg.validate()?;
    let mut engine = Engine::new(cfg, table, want_trace)?;
    engine.run_loop();
    Ok(engine.finish())
}

// ---------------------------------------------------------------------------
// Runtime state
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RouteEntry {
    /// Undercover: hand the packet to this relay.
    Relay(NodeId),
    /// Baselines: forward to this next hop.
    Next(NodeId),
}

#[derive(Debug)]
struct DiscoveryState {
    id: u64,
    replies: Vec<RouteReply>,
}

#[derive(Debug)]
struct Node {
    id: NodeId,
    pos: Position,
    /// Ground-truth in-range peers, sorted by id.
    reach: Vec<NodeId>,
    queue: VecDeque<PacketId>,
    busy_until: f64,
    state: NeighborState,
    /// Last time this node transmitted or received data of each flow.
    witnessed: BTreeMap<FlowId, f64>,
    routes: BTreeMap<FlowId, RouteEntry>,
    /// Winning candidates this node must execute as coordinator.
    relay_roles: BTreeMap<FlowId, LinkCandidate>,
    /// Candidates offered in RREPs, keyed by (requester, flow, discovery).
    offered: BTreeMap<(NodeId, FlowId, u64), LinkCandidate>,
    discoveries: BTreeMap<FlowId, DiscoveryState>,
}

#[derive(Debug)]
struct Pu {
    proc: PuProcess,
    on_intervals: Vec<(f64, f64)>,
    active: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PacketState {
    Queued,
    InFlight,
    Delivered,
    Dropped,
}

#[derive(Debug)]
struct Packet {
    flow: FlowId,
    dest: NodeId,
    created: f64,
    size_bits: f64,
    /// Nodes holding the payload (receptions and overhearings).
    holders: BTreeSet<NodeId>,
    state: PacketState,
}

#[derive(Debug, Clone)]
enum TxKind {
    Handoff { from: NodeId, to: NodeId },
    Dissemination { coordinator: NodeId, candidate: LinkCandidate, prev: NodeId },
    Coop { candidate: LinkCandidate, prev: NodeId },
    P2pHop { from: NodeId, to: NodeId },
}

#[derive(Debug)]
struct Tx {
    kind: TxKind,
    packet: PacketId,
    start: f64,
    end: f64,
    transmitters: Vec<NodeId>,
    /// PUs the transmission is verified-nulled against, with residuals.
    protected: Vec<(PuId, f64)>,
    live: bool,
}

/// Outcome of one dispatch attempt at a node's queue head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    /// A transmission started, the head must wait, or nothing is queued.
    Done,
    /// The head left the queue without occupying the radio; look at the
    /// next packet.
    Retry,
}

/// Stages that could not start because the transmitter was inside an
/// active PU's range or the instantaneous rate was unusable; retried on
/// every PU deactivation and coherence refresh.
#[derive(Debug)]
enum StalledStage {
    Dissemination {
        coordinator: NodeId,
        packet: PacketId,
        candidate: LinkCandidate,
        prev: NodeId,
    },
    Coop {
        coordinator: NodeId,
        packet: PacketId,
        candidate: LinkCandidate,
        prev: NodeId,
    },
}

#[derive(Debug, Clone)]
struct Flow {
    id: FlowId,
    src: NodeId,
    dest: NodeId,
    start: f64,
    interarrival: f64,
}

#[derive(Default)]
struct Collector {
    delivered_bits: f64,
    delays: Vec<f64>,
    control_packets: u64,
    group_sizes: Vec<usize>,
    opportunities: Vec<usize>,
    queue_area: f64,
    queue_last_t: f64,
    queue_total: usize,
    flow_counts: BTreeMap<FlowId, FlowCounts>,
}

struct FieldChannels<'a> {
    field: &'a ChannelField,
    epoch: u64,
}

impl ChannelLookup for FieldChannels<'_> {
    fn su(&self, a: NodeId, b: NodeId) -> Complex64 {
        self.field.su(a, b, self.epoch)
    }
}

struct Engine<'a> {
    cfg: &'a ScenarioConfig,
    table: &'a ThresholdTable,
    field: ChannelField,
    queue: EventQueue,
    now: f64,
    warmup: f64,
    nodes: Vec<Node>,
    pus: Vec<Pu>,
    packets: Vec<Packet>,
    txs: Vec<Tx>,
    flows: Vec<Flow>,
    /// Static connectivity graph for flooding discovery.
    adjacency: BTreeMap<NodeId, Vec<NodeId>>,
    stalled: Vec<StalledStage>,
    next_discovery: u64,
    m: Collector,
    trace: Vec<TraceEvent>,
    want_trace: bool,
}

impl<'a> Engine<'a> {
    fn new(
        cfg: &'a ScenarioConfig,
        table: &'a ThresholdTable,
        want_trace: bool,
    ) -> Result<Self, ConfigError> {
        let field = ChannelField::new(cfg.seed ^ 0xF1E1D, cfg.channel_model());
        let mut placement_rng = ChaCha12Rng::seed_from_u64(cfg.seed.wrapping_add(1));
        let mut schedule_rng = ChaCha12Rng::seed_from_u64(cfg.seed.wrapping_add(2));
        let mut traffic_rng = ChaCha12Rng::seed_from_u64(cfg.seed.wrapping_add(3));

        let su_positions: Vec<Position> = match &cfg.su_positions {
            Some(list) => list.iter().map(|(x, y)| Position::new(*x, *y)).collect(),
            None => (0..cfg.num_sus)
                .map(|_| {
                    Position::new(
                        placement_rng.gen_range(0.0..cfg.area_side),
                        placement_rng.gen_range(0.0..cfg.area_side),
                    )
                })
                .collect(),
        };
        for p in &su_positions {
            if !(0.0..=cfg.area_side).contains(&p.x) || !(0.0..=cfg.area_side).contains(&p.y) {
                return Err(ConfigError::new(format!(
                    "SU position ({}, {}) outside deployment area",
                    p.x, p.y
                )));
            }
        }
        let pu_positions: Vec<Position> = match &cfg.pu_positions {
            Some(list) => list.iter().map(|(x, y)| Position::new(*x, *y)).collect(),
            None => (0..cfg.num_pus)
                .map(|_| {
                    Position::new(
                        placement_rng.gen_range(0.0..cfg.area_side),
                        placement_rng.gen_range(0.0..cfg.area_side),
                    )
                })
                .collect(),
        };

        let mut nodes: Vec<Node> = su_positions
            .iter()
            .enumerate()
            .map(|(i, pos)| Node {
                id: i as NodeId,
                pos: *pos,
                reach: Vec::new(),
                queue: VecDeque::new(),
                busy_until: 0.0,
                state: NeighborState::new(),
                witnessed: BTreeMap::new(),
                routes: BTreeMap::new(),
                relay_roles: BTreeMap::new(),
                offered: BTreeMap::new(),
                discoveries: BTreeMap::new(),
            })
            .collect();
        for i in 0..nodes.len() {
            let mut reach = Vec::new();
            for j in 0..nodes.len() {
                if i != j && nodes[i].pos.distance(&nodes[j].pos) <= cfg.su_range {
                    reach.push(j as NodeId);
                }
            }
            nodes[i].reach = reach;
        }

        let mut pus = Vec::new();
        let horizon = cfg.horizon;
        for (i, pos) in pu_positions.iter().enumerate() {
            let cycle = cfg.pu_cycle_mean * schedule_rng.gen_range(0.5..1.5);
            let proc = PuProcess {
                id: i as PuId,
                position: *pos,
                mean_on: cfg.pu_activity * cycle,
                mean_off: (1.0 - cfg.pu_activity) * cycle,
                channel: 0,
            };
            let on_intervals: Vec<(f64, f64)> = sample_pu_schedule(&proc, horizon, &mut schedule_rng)
                .into_iter()
                .map(|(s, e)| (s, e.min(horizon)))
                .collect();
            pus.push(Pu {
                proc,
                on_intervals,
                active: false,
            });
        }

        let mut flows = Vec::new();
        for k in 0..cfg.num_flows {
            let (src, dest) = match &cfg.flow_endpoints {
                Some(list) => list[k],
                None => {
                    let src = traffic_rng.gen_range(0..cfg.num_sus) as NodeId;
                    let mut dest = traffic_rng.gen_range(0..cfg.num_sus) as NodeId;
                    while dest == src {
                        dest = traffic_rng.gen_range(0..cfg.num_sus) as NodeId;
                    }
                    (src, dest)
                }
            };
            let size_bits = (cfg.packet_size * 8) as f64;
            flows.push(Flow {
                id: k as FlowId,
                src,
                dest,
                start: 2.0 + 0.1 * k as f64,
                interarrival: size_bits / cfg.rate_per_source,
            });
        }

        let adjacency: BTreeMap<NodeId, Vec<NodeId>> =
            nodes.iter().map(|n| (n.id, n.reach.clone())).collect();
        let mut engine = Engine {
            cfg,
            table,
            field,
            queue: EventQueue::new(),
            now: 0.0,
            warmup: WARMUP_FRACTION * horizon,
            nodes,
            pus,
            packets: Vec::new(),
            txs: Vec::new(),
            flows,
            adjacency,
            stalled: Vec::new(),
            next_discovery: 0,
            m: Collector::default(),
            trace: Vec::new(),
            want_trace,
        };

        // Seed the event queue in a fixed order.
        for pu_idx in 0..engine.pus.len() {
            let intervals = engine.pus[pu_idx].on_intervals.clone();
            for (s, e) in intervals {
                if s <= 0.0 {
                    engine.pus[pu_idx].active = true;
                } else {
                    engine.queue.push(s, EventKind::PuOn { pu: pu_idx as PuId });
                }
                if e < horizon {
                    engine.queue.push(e, EventKind::PuOff { pu: pu_idx as PuId });
                }
            }
        }
        if engine.cfg.protocol != Protocol::CaodvLike {
            for id in 0..engine.nodes.len() {
                engine.queue.push(0.0, EventKind::HelloDue { node: id as NodeId });
            }
        }
        for flow in engine.flows.clone() {
            engine.queue.push(flow.start, EventKind::FlowPacketDue { flow: flow.id });
        }
        let mut t = cfg.coherence_time;
        while t < horizon {
            engine.queue.push(t, EventKind::ChannelRefresh);
            t += cfg.coherence_time;
        }
        for flow in &engine.flows {
            engine.m.flow_counts.insert(flow.id, FlowCounts::default());
        }
        Ok(engine)
    }

    // -- helpers ------------------------------------------------------------

    fn epoch(&self) -> u64 {
        self.field.epoch(self.now)
    }

    fn pos(&self, id: NodeId) -> Position {
        self.nodes[id as usize].pos
    }

    /// Active PUs whose interference disk contains the node.
    fn covering_pus(&self, id: NodeId) -> Vec<PuId> {
        let p = self.pos(id);
        self.pus
            .iter()
            .enumerate()
            .filter(|(_, pu)| pu.active && pu.proc.position.distance(&p) <= self.cfg.pu_range)
            .map(|(i, _)| i as PuId)
            .collect()
    }

    fn is_covered(&self, id: NodeId) -> bool {
        !self.covering_pus(id).is_empty()
    }

    /// Flow-carrying nodes inside any transmitter's range, excluding the
    /// participants of the transmission itself (transmitters and
    /// receivers do not contend with their own exchange).
    fn carries_flows(&self, node: NodeId) -> bool {
        let window = CARRIER_WINDOW_PERIODS * self.cfg.hello_period;
        self.nodes[node as usize]
            .witnessed
            .values()
            .any(|t| self.now - *t <= window)
    }

    fn contenders(&self, transmitters: &[NodeId], participants: &[NodeId]) -> usize {
        let mut n = 0;
        'outer: for node in &self.nodes {
            if participants.contains(&node.id) || !self.carries_flows(node.id) {
                continue;
            }
            for t in transmitters {
                if self.pos(*t).distance(&node.pos) <= self.cfg.su_range {
                    n += 1;
                    continue 'outer;
                }
            }
        }
        n
    }

    fn effective_rate(&self, nominal: f64, transmitters: &[NodeId], receivers: &[NodeId]) -> f64 {
        let mut participants: Vec<NodeId> = transmitters.to_vec();
        participants.extend_from_slice(receivers);
        nominal / (1.0 + self.contenders(transmitters, &participants) as f64)
    }

    fn trace_push(&mut self, ev: TraceEvent) {
        if self.want_trace {
            self.trace.push(ev);
        }
    }

    fn count_control(&mut self) {
        if self.now >= self.warmup {
            self.m.control_packets += 1;
        }
    }

    fn queue_area_update(&mut self) {
        let t0 = self.m.queue_last_t.max(self.warmup);
        if self.now > t0 {
            self.m.queue_area += self.m.queue_total as f64 * (self.now - t0);
        }
        self.m.queue_last_t = self.now;
    }

    fn enqueue_packet(&mut self, node: NodeId, packet: PacketId) {
        self.queue_area_update();
        self.nodes[node as usize].queue.push_back(packet);
        self.packets[packet as usize].state = PacketState::Queued;
        self.m.queue_total += 1;
    }

    fn dequeue_packet(&mut self, node: NodeId) -> Option<PacketId> {
        self.queue_area_update();
        let p = self.nodes[node as usize].queue.pop_front();
        if p.is_some() {
            self.m.queue_total -= 1;
        }
        p
    }

    fn remove_flow_packet(&mut self, node: NodeId, flow: FlowId) -> Option<PacketId> {
        let idx = self.nodes[node as usize]
            .queue
            .iter()
            .position(|pid| self.packets[*pid as usize].flow == flow)?;
        self.queue_area_update();
        let pid = self.nodes[node as usize].queue.remove(idx).unwrap();
        self.m.queue_total -= 1;
        Some(pid)
    }

    fn deliver(&mut self, packet: PacketId) {
        let (flow, created, bits) = {
            let p = &mut self.packets[packet as usize];
            p.state = PacketState::Delivered;
            (p.flow, p.created, p.size_bits)
        };
        self.m.flow_counts.get_mut(&flow).unwrap().delivered += 1;
        if created >= self.warmup && self.now <= self.cfg.horizon {
            self.m.delivered_bits += bits;
            self.m.delays.push(self.now - created);
        }
        let dest = self.packets[packet as usize].dest;
        self.trace_push(TraceEvent::new(self.now, "deliver").dst(dest).flow(flow));
    }

    fn drop_packet(&mut self, packet: PacketId, why: &'static str) {
        let flow = {
            let p = &mut self.packets[packet as usize];
            p.state = PacketState::Dropped;
            p.flow
        };
        self.m.flow_counts.get_mut(&flow).unwrap().dropped += 1;
        self.trace_push(TraceEvent::new(self.now, why).flow(flow));
    }

    /// Active in-range PU channels for a set of nodes, at current truth.
    fn active_pu_channels(
        &self,
        ids: impl Iterator<Item = NodeId>,
    ) -> BTreeMap<NodeId, Vec<(PuId, Complex64)>> {
        let epoch = self.epoch();
        let mut out = BTreeMap::new();
        for id in ids {
            let p = self.pos(id);
            let mut list = Vec::new();
            for (i, pu) in self.pus.iter().enumerate() {
                if pu.active && pu.proc.position.distance(&p) <= self.cfg.pu_range {
                    list.push((i as PuId, self.field.su_pu(id, i as PuId, epoch)));
                }
            }
            if !list.is_empty() {
                out.insert(id, list);
            }
        }
        out
    }

    // -- main loop ----------------------------------------------------------

    fn run_loop(&mut self) {
        while let Some(ev) = self.queue.pop() {
            if ev.time > self.cfg.horizon {
                break;
            }
            self.now = ev.time;
            match ev.kind {
                EventKind::HelloDue { node } => self.on_hello_due(node),
                EventKind::FlowPacketDue { flow } => self.on_flow_packet_due(flow),
                EventKind::PacketArrival { node, packet } => match packet {
                    ArrivedPacket::Data(pid) => self.on_data_arrival(node, pid),
                    ArrivedPacket::Ctrl(ctrl) => self.on_ctrl_arrival(node, ctrl),
                },
                EventKind::TxComplete { tx } => self.on_tx_complete(tx),
                EventKind::PuOn { pu } => self.on_pu_on(pu),
                EventKind::PuOff { pu } => self.on_pu_off(pu),
                EventKind::RrepTimeout { node, flow, discovery } => {
                    self.on_rrep_timeout(node, flow, discovery)
                }
                EventKind::ChannelRefresh => self.on_channel_refresh(),
            }
        }
        self.now = self.cfg.horizon;
        self.queue_area_update();
    }

    // -- hello plane ----------------------------------------------------------

    fn on_hello_due(&mut self, node: NodeId) {
        let epoch = self.epoch();
        let me = &self.nodes[node as usize];
        let neighbor_entries: Vec<(NodeId, Complex64)> = me
            .state
            .ids()
            .map(|n| (n, self.field.su(node, n, epoch)))
            .collect();
        let p = me.pos;
        let pu_entries: Vec<(PuId, Complex64)> = self
            .pus
            .iter()
            .enumerate()
            .filter(|(_, pu)| pu.proc.position.distance(&p) <= self.cfg.pu_range)
            .map(|(i, _)| (i as PuId, self.field.su_pu(node, i as PuId, epoch)))
            .collect();
        let window = CARRIER_WINDOW_PERIODS * self.cfg.hello_period;
        let packet = HelloPacket {
            origin: node,
            origin_position: p,
            timestamp: self.now,
            neighbor_entries,
            pu_entries,
            witnessed_flows: me
                .witnessed
                .iter()
                .filter(|(_, t)| self.now - **t <= window)
                .map(|(f, _)| *f)
                .collect(),
        };
        let reach = me.reach.clone();
        self.trace_push(TraceEvent::new(self.now, "hello").src(node));
        for r in reach {
            self.queue.push(
                self.now + self.cfg.ctrl_latency,
                EventKind::PacketArrival {
                    node: r,
                    packet: ArrivedPacket::Ctrl(CtrlPacket::Hello(packet.clone())),
                },
            );
        }
        self.queue.push(
            self.now + self.cfg.hello_period,
            EventKind::HelloDue { node },
        );
    }

    // -- traffic --------------------------------------------------------------

    fn on_flow_packet_due(&mut self, flow: FlowId) {
        let f = self.flows[flow as usize].clone();
        let pid = self.packets.len() as PacketId;
        self.packets.push(Packet {
            flow,
            dest: f.dest,
            created: self.now,
            size_bits: (self.cfg.packet_size * 8) as f64,
            holders: BTreeSet::from([f.src]),
            state: PacketState::Queued,
        });
        self.m.flow_counts.get_mut(&flow).unwrap().generated += 1;
        let now = self.now;
        self.nodes[f.src as usize].witnessed.insert(flow, now);
        self.enqueue_packet(f.src, pid);
        let next = self.now + f.interarrival;
        if next < self.cfg.horizon {
            self.queue.push(next, EventKind::FlowPacketDue { flow });
        }
        self.try_dispatch(f.src);
    }

    // -- dispatch -------------------------------------------------------------

    /// Work through the node's queue head until a transmission starts,
    /// the head must wait, or the queue drains.  `Step::Retry` means the
    /// head was consumed without keeping the radio busy.
    fn try_dispatch(&mut self, node: NodeId) {
        loop {
            if self.now < self.nodes[node as usize].busy_until {
                return;
            }
            let Some(&pid) = self.nodes[node as usize].queue.front() else {
                return;
            };
            let packet = &self.packets[pid as usize];
            let flow = packet.flow;
            let dest = packet.dest;
            let step = if dest == node {
                // Defensive: destinations consume on arrival.
                self.dequeue_packet(node);
                self.deliver(pid);
                Step::Retry
            } else {
                match self.cfg.protocol {
                    Protocol::Undercover => self.dispatch_undercover(node, pid, flow, dest),
                    Protocol::LaunchLike => self.dispatch_greedy(node, pid, flow, dest),
                    Protocol::CaodvLike => self.dispatch_flooding(node, pid, flow, dest),
                }
            };
            match step {
                Step::Retry => continue,
                Step::Done => return,
            }
        }
    }

    fn dispatch_undercover(&mut self, node: NodeId, pid: PacketId, flow: FlowId, dest: NodeId) -> Step {
        match self.nodes[node as usize].routes.get(&flow) {
            Some(RouteEntry::Relay(v)) => {
                let relay = *v;
                self.start_handoff(node, relay, pid, flow)
            }
            Some(RouteEntry::Next(_)) => unreachable!("undercover uses relay routes"),
            None => {
                if !self.nodes[node as usize].discoveries.contains_key(&flow) {
                    self.start_discovery(node, flow, dest);
                }
                Step::Done
            }
        }
    }

    fn start_discovery(&mut self, node: NodeId, flow: FlowId, dest: NodeId) {
        let id = self.next_discovery;
        self.next_discovery += 1;
        self.nodes[node as usize]
            .discoveries
            .insert(flow, DiscoveryState { id, replies: Vec::new() });
        let rreq = RouteRequest {
            source: node,
            source_position: self.pos(node),
            dest,
            dest_position: self.pos(dest),
            flow,
        };
        self.count_control();
        self.trace_push(TraceEvent::new(self.now, "rreq").src(node).dst(dest).flow(flow));
        let neighbors: Vec<NodeId> = self.nodes[node as usize].state.ids().collect();
        for n in neighbors {
            self.queue.push(
                self.now + self.cfg.ctrl_latency,
                EventKind::PacketArrival {
                    node: n,
                    packet: ArrivedPacket::Ctrl(CtrlPacket::Rreq {
                        rreq: rreq.clone(),
                        discovery: id,
                    }),
                },
            );
        }
        self.queue.push(
            self.now + self.cfg.rrep_timeout,
            EventKind::RrepTimeout { node, flow, discovery: id },
        );
    }

    fn on_rrep_timeout(&mut self, node: NodeId, flow: FlowId, discovery: u64) {
        let Some(state) = self.nodes[node as usize].discoveries.get(&flow) else {
            return;
        };
        if state.id != discovery {
            return;
        }
        let state = self.nodes[node as usize].discoveries.remove(&flow).unwrap();
        match select_next_hop(&state.replies) {
            Some(winner) => {
                self.count_control();
                self.trace_push(TraceEvent::new(self.now, "ack").src(node).dst(winner).flow(flow));
                self.queue.push(
                    self.now + self.cfg.ctrl_latency,
                    EventKind::PacketArrival {
                        node: winner,
                        packet: ArrivedPacket::Ctrl(CtrlPacket::Ack {
                            ack: Ack { requester: node, chosen: winner, flow },
                            discovery,
                        }),
                    },
                );
            }
            None => {
                // Route failure: drop the packet that triggered discovery.
                self.trace_push(TraceEvent::new(self.now, "route_fail").src(node).flow(flow));
                if let Some(pid) = self.remove_flow_packet(node, flow) {
                    self.drop_packet(pid, "drop_no_route");
                }
                self.try_dispatch(node);
            }
        }
    }

    // -- control plane --------------------------------------------------------

    fn on_ctrl_arrival(&mut self, node: NodeId, ctrl: CtrlPacket) {
        match ctrl {
            CtrlPacket::Hello(packet) => {
                let coeff = self.field.su(node, packet.origin, self.epoch());
                let me = &mut self.nodes[node as usize];
                me.state.handle_hello(&packet, coeff);
                let (now, timeout) = (self.now, self.cfg.hello_timeout);
                me.state.evict_stale(now, timeout);
            }
            CtrlPacket::Rreq { rreq, discovery } => self.on_rreq(node, rreq, discovery),
            CtrlPacket::Rrep { reply, discovery } => {
                // Match the pending discovery by id; stale replies are
                // ignored.
                let me = &mut self.nodes[node as usize];
                for state in me.discoveries.values_mut() {
                    if state.id == discovery {
                        state.replies.push(reply);
                        break;
                    }
                }
            }
            CtrlPacket::Ack { ack, discovery } => self.on_ack(node, ack, discovery),
            CtrlPacket::Arep { arep, .. } => {
                let me = &mut self.nodes[node as usize];
                me.routes.insert(arep.flow, RouteEntry::Relay(arep.relay));
                self.try_dispatch(node);
            }
            CtrlPacket::RouteSetup { .. } => {
                // Informational: the next hop learns it was chosen.
            }
        }
    }

    fn on_rreq(&mut self, node: NodeId, rreq: RouteRequest, discovery: u64) {
        let me = &self.nodes[node as usize];
        let member_ids: Vec<NodeId> =
            std::iter::once(node).chain(me.state.ids()).collect();
        let pu_channels = self.active_pu_channels(member_ids.into_iter());
        let channels = FieldChannels { field: &self.field, epoch: self.epoch() };
        let window = CARRIER_WINDOW_PERIODS * self.cfg.hello_period;
        let me = &self.nodes[node as usize];
        let own_witnessed: BTreeSet<FlowId> = me
            .witnessed
            .iter()
            .filter(|(_, t)| self.now - **t <= window)
            .map(|(f, _)| *f)
            .collect();
        let view = RreqView {
            self_id: node,
            self_position: me.pos,
            rreq: &rreq,
            neighbors: &me.state,
            own_witnessed: &own_witnessed,
            active_pu_channels: &pu_channels,
            channels: &channels,
            table: self.table,
            beta: self.cfg.beta,
            radio: self.cfg.radio(),
            prop: self.cfg.propagation(),
            su_range: self.cfg.su_range,
            max_enumeration_neighbors: MAX_ENUM_NEIGHBORS,
        };
        match handle_rreq(&view) {
            RreqOutcome::Reply { reply, candidate, opportunities } => {
                if self.now >= self.warmup {
                    self.m.opportunities.push(opportunities);
                }
                self.nodes[node as usize]
                    .offered
                    .insert((rreq.source, rreq.flow, discovery), candidate);
                self.count_control();
                self.trace_push(
                    TraceEvent::new(self.now, "rrep").src(node).dst(rreq.source).flow(rreq.flow),
                );
                self.queue.push(
                    self.now + self.cfg.ctrl_latency,
                    EventKind::PacketArrival {
                        node: rreq.source,
                        packet: ArrivedPacket::Ctrl(CtrlPacket::Rrep { reply, discovery }),
                    },
                );
            }
            RreqOutcome::Discard => {}
        }
    }

    fn on_ack(&mut self, node: NodeId, ack: Ack, discovery: u64) {
        let key = (ack.requester, ack.flow, discovery);
        let Some(candidate) = self.nodes[node as usize].offered.remove(&key) else {
            return;
        };
        self.nodes[node as usize].relay_roles.insert(ack.flow, candidate);
        self.count_control();
        self.trace_push(
            TraceEvent::new(self.now, "arep").src(node).dst(ack.requester).flow(ack.flow),
        );
        self.queue.push(
            self.now + self.cfg.ctrl_latency,
            EventKind::PacketArrival {
                node: ack.requester,
                packet: ArrivedPacket::Ctrl(CtrlPacket::Arep {
                    arep: AckReply { relay: node, requester: ack.requester, flow: ack.flow },
                    discovery,
                }),
            },
        );
    }

    // -- undercover data plane --------------------------------------------------

    fn start_handoff(&mut self, from: NodeId, to: NodeId, pid: PacketId, flow: FlowId) -> Step {
        // A relay that already holds the payload needs no transmission.
        if self.packets[pid as usize].holders.contains(&to) {
            self.dequeue_packet(from);
            self.packets[pid as usize].state = PacketState::InFlight;
            if self.cfg.route_reuse == RouteReuse::PerPacket {
                self.nodes[from as usize].routes.remove(&flow);
            }
            self.queue.push(
                self.now,
                EventKind::PacketArrival { node: to, packet: ArrivedPacket::Data(pid) },
            );
            return Step::Retry;
        }
        if self.is_covered(from) {
            return Step::Done; // Stalls at the queue head; retried on PuOff/refresh.
        }
        let epoch = self.epoch();
        let nominal = capacity_p2p(self.field.su(from, to, epoch), &self.cfg.radio());
        let rate = self.effective_rate(nominal, &[from], &[to]);
        if rate < MIN_RATE_BPS {
            return Step::Done; // Unusable fade; wait for the next coherence interval.
        }
        self.dequeue_packet(from);
        if self.cfg.route_reuse == RouteReuse::PerPacket {
            self.nodes[from as usize].routes.remove(&flow);
        }
        let duration = self.packets[pid as usize].size_bits / rate;
        self.begin_tx(
            TxKind::Handoff { from, to },
            pid,
            duration,
            vec![from],
            Vec::new(),
        );
        Step::Done
    }

    fn start_dissemination(
        &mut self,
        coordinator: NodeId,
        pid: PacketId,
        candidate: LinkCandidate,
        prev: NodeId,
    ) {
        let needing: Vec<NodeId> = candidate
            .group
            .iter()
            .copied()
            .filter(|m| *m != coordinator && !self.packets[pid as usize].holders.contains(m))
            .collect();
        if needing.is_empty() {
            self.start_coop(coordinator, pid, candidate, prev);
            return;
        }
        if self.is_covered(coordinator) {
            self.stalled.push(StalledStage::Dissemination {
                coordinator,
                packet: pid,
                candidate,
                prev,
            });
            return;
        }
        let epoch = self.epoch();
        let radio = self.cfg.radio();
        let c_wor = needing
            .iter()
            .map(|m| capacity_p2p(self.field.su(coordinator, *m, epoch), &radio))
            .fold(f64::INFINITY, f64::min);
        let rate = self.effective_rate(c_wor, &[coordinator], &needing);
        if rate < MIN_RATE_BPS {
            self.stalled.push(StalledStage::Dissemination {
                coordinator,
                packet: pid,
                candidate,
                prev,
            });
            return;
        }
        let duration = self.packets[pid as usize].size_bits / rate;
        self.begin_tx(
            TxKind::Dissemination { coordinator, candidate, prev },
            pid,
            duration,
            vec![coordinator],
            Vec::new(),
        );
    }

    fn start_coop(
        &mut self,
        coordinator: NodeId,
        pid: PacketId,
        candidate: LinkCandidate,
        prev: NodeId,
    ) {
        let group = candidate.group.clone();
        let epoch = self.epoch();

        // Rebuild the constraint matrix against currently active PUs.
        let mut pus: BTreeSet<PuId> = BTreeSet::new();
        for m in &group {
            pus.extend(self.covering_pus(*m));
        }
        if group.len() <= pus.len() {
            self.route_failure(prev, coordinator, pid, "drop_group_infeasible");
            return;
        }
        let rows: Vec<Vec<Complex64>> = pus
            .iter()
            .map(|pu| {
                group
                    .iter()
                    .map(|m| {
                        let in_range = self.pus[*pu as usize]
                            .proc
                            .position
                            .distance(&self.pos(*m))
                            <= self.cfg.pu_range;
                        if in_range {
                            self.field.su_pu(*m, *pu, epoch)
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let h_p = ChannelMatrix::from_rows(&rows, group.len());
        let h_cd: Vec<Complex64> = group
            .iter()
            .map(|m| self.field.su(*m, candidate.next_hop, epoch))
            .collect();
        let weights = match compute_null_weights(&h_p, &h_cd) {
            Ok(w) => w,
            Err(BeamError::DegenerateChannel) => {
                self.route_failure(prev, coordinator, pid, "drop_degenerate_channel");
                return;
            }
            Err(BeamError::GroupTooSmall { .. }) => {
                self.route_failure(prev, coordinator, pid, "drop_group_infeasible");
                return;
            }
        };
        let protected: Vec<(PuId, f64)> = pus
            .iter()
            .enumerate()
            .map(|(row_idx, pu)| {
                let residual = h_p
                    .row(row_idx)
                    .iter()
                    .zip(weights.as_slice())
                    .map(|(h, w)| h * w)
                    .sum::<Complex64>()
                    .norm();
                (*pu, residual)
            })
            .collect();
        debug_assert!(protected.iter().all(|(_, r)| *r <= NULL_TOL));

        let nominal = capacity_coop(&weights, &h_cd, &self.cfg.radio());
        let rate = self.effective_rate(nominal, &group, &[candidate.next_hop]);
        if rate < MIN_RATE_BPS {
            self.stalled.push(StalledStage::Coop {
                coordinator,
                packet: pid,
                candidate,
                prev,
            });
            return;
        }
        let duration = self.packets[pid as usize].size_bits / rate;
        if self.now >= self.warmup {
            self.m.group_sizes.push(group.len());
        }
        self.begin_tx(
            TxKind::Coop { candidate, prev },
            pid,
            duration,
            group,
            protected,
        );
    }

    fn route_failure(&mut self, prev: NodeId, relay: NodeId, pid: PacketId, why: &'static str) {
        let flow = self.packets[pid as usize].flow;
        self.nodes[prev as usize].routes.remove(&flow);
        self.nodes[relay as usize].relay_roles.remove(&flow);
        self.trace_push(TraceEvent::new(self.now, "route_fail").src(relay).flow(flow));
        self.drop_packet(pid, why);
    }

    // -- baseline data plane ------------------------------------------------

    fn dispatch_greedy(&mut self, node: NodeId, pid: PacketId, flow: FlowId, dest: NodeId) -> Step {
        let next = match self.nodes[node as usize].routes.get(&flow) {
            Some(RouteEntry::Next(n)) => *n,
            Some(RouteEntry::Relay(_)) => unreachable!("baselines use next-hop routes"),
            None => {
                let me = &self.nodes[node as usize];
                let neighbors: Vec<GreedyNeighbor> = me
                    .state
                    .iter()
                    .map(|(id, info)| GreedyNeighbor {
                        id: *id,
                        position: info.position,
                        coeff: info.coeff,
                        pu_blocked: self.is_covered(*id),
                    })
                    .collect();
                match greedy_next_hop(me.pos, dest, self.pos(dest), &neighbors) {
                    Some(n) => {
                        self.nodes[node as usize].routes.insert(flow, RouteEntry::Next(n));
                        // One route-setup packet per selection.
                        self.count_control();
                        self.trace_push(
                            TraceEvent::new(self.now, "route_setup").src(node).dst(n).flow(flow),
                        );
                        self.queue.push(
                            self.now + self.cfg.ctrl_latency,
                            EventKind::PacketArrival {
                                node: n,
                                packet: ArrivedPacket::Ctrl(CtrlPacket::RouteSetup {
                                    from: node,
                                    flow,
                                }),
                            },
                        );
                        n
                    }
                    None => {
                        self.dequeue_packet(node);
                        self.drop_packet(pid, "drop_no_route");
                        return Step::Retry;
                    }
                }
            }
        };
        self.start_p2p_hop(node, next, pid, flow, false)
    }

    fn dispatch_flooding(&mut self, node: NodeId, pid: PacketId, flow: FlowId, dest: NodeId) -> Step {
        let next = match self.nodes[node as usize].routes.get(&flow) {
            Some(RouteEntry::Next(n)) => *n,
            Some(RouteEntry::Relay(_)) => unreachable!("baselines use next-hop routes"),
            None => {
                let blocked: BTreeSet<NodeId> = self
                    .nodes
                    .iter()
                    .filter(|n| self.is_covered(n.id))
                    .map(|n| n.id)
                    .collect();
                match flood_discover(node, dest, &self.adjacency, &blocked) {
                    Ok(out) => {
                        if self.now >= self.warmup {
                            self.m.control_packets += out.control_packets;
                        }
                        self.trace_push(
                            TraceEvent::new(self.now, "flood").src(node).dst(dest).flow(flow),
                        );
                        for hop in out.path.windows(2) {
                            self.nodes[hop[0] as usize]
                                .routes
                                .insert(flow, RouteEntry::Next(hop[1]));
                        }
                        out.path[1]
                    }
                    Err(control) => {
                        if self.now >= self.warmup {
                            self.m.control_packets += control;
                        }
                        self.dequeue_packet(node);
                        self.drop_packet(pid, "drop_no_route");
                        return Step::Retry;
                    }
                }
            }
        };
        self.start_p2p_hop(node, next, pid, flow, true)
    }

    /// One baseline forwarding transmission.  Greedy holders wait out PU
    /// coverage (`drop_on_block = false`); the flooding baseline drops
    /// and re-discovers, mirroring global repair.
    fn start_p2p_hop(
        &mut self,
        from: NodeId,
        to: NodeId,
        pid: PacketId,
        flow: FlowId,
        drop_on_block: bool,
    ) -> Step {
        if self.is_covered(from) {
            if drop_on_block {
                self.dequeue_packet(from);
                self.nodes[from as usize].routes.remove(&flow);
                self.drop_packet(pid, "drop_pu_blocked");
                return Step::Retry;
            }
            return Step::Done;
        }
        let epoch = self.epoch();
        let nominal = capacity_p2p(self.field.su(from, to, epoch), &self.cfg.radio());
        let rate = self.effective_rate(nominal, &[from], &[to]);
        if rate < MIN_RATE_BPS {
            return Step::Done; // Wait for the next coherence interval.
        }
        self.dequeue_packet(from);
        if self.cfg.route_reuse == RouteReuse::PerPacket {
            self.nodes[from as usize].routes.remove(&flow);
        }
        let duration = self.packets[pid as usize].size_bits / rate;
        self.begin_tx(TxKind::P2pHop { from, to }, pid, duration, vec![from], Vec::new());
        Step::Done
    }

    // -- transmissions ----------------------------------------------------------

    fn begin_tx(
        &mut self,
        kind: TxKind,
        packet: PacketId,
        duration: f64,
        transmitters: Vec<NodeId>,
        protected: Vec<(PuId, f64)>,
    ) {
        let end = self.now + duration;
        for t in &transmitters {
            let node = &mut self.nodes[*t as usize];
            node.busy_until = node.busy_until.max(end);
        }
        self.packets[packet as usize].state = PacketState::InFlight;
        let id = self.txs.len() as TxId;
        let (label, src, dst, group) = match &kind {
            TxKind::Handoff { from, to } => ("data_handoff", *from, *to, Vec::new()),
            TxKind::Dissemination { coordinator, candidate, .. } => {
                ("data_dissem", *coordinator, *coordinator, candidate.group.clone())
            }
            TxKind::Coop { candidate, .. } => {
                ("data_coop", candidate.coordinator, candidate.next_hop, candidate.group.clone())
            }
            TxKind::P2pHop { from, to } => ("data_p2p", *from, *to, Vec::new()),
        };
        let flow = self.packets[packet as usize].flow;
        self.trace_push(
            TraceEvent::new(self.now, label).src(src).dst(dst).flow(flow).group(&group),
        );
        self.txs.push(Tx {
            kind,
            packet,
            start: self.now,
            end,
            transmitters,
            protected,
            live: true,
        });
        self.queue.push(end, EventKind::TxComplete { tx: id });
    }

    /// Everyone inside any transmitter's range now holds the payload.
    fn mark_overheard(&mut self, pid: PacketId, transmitters: &[NodeId]) {
        let mut heard: Vec<NodeId> = Vec::new();
        for node in &self.nodes {
            for t in transmitters {
                if node.id != *t && self.pos(*t).distance(&node.pos) <= self.cfg.su_range {
                    heard.push(node.id);
                    break;
                }
            }
        }
        let p = &mut self.packets[pid as usize];
        p.holders.extend(transmitters.iter().copied());
        p.holders.extend(heard);
    }

    fn on_tx_complete(&mut self, tx_id: TxId) {
        if !self.txs[tx_id as usize].live {
            return;
        }
        self.txs[tx_id as usize].live = false;
        let kind = self.txs[tx_id as usize].kind.clone();
        let pid = self.txs[tx_id as usize].packet;
        let transmitters = self.txs[tx_id as usize].transmitters.clone();
        let flow = self.packets[pid as usize].flow;
        self.mark_overheard(pid, &transmitters);
        match kind {
            TxKind::Handoff { from, to } => {
                self.nodes[from as usize].witnessed.insert(flow, self.now);
                self.nodes[to as usize].witnessed.insert(flow, self.now);
                self.queue.push(
                    self.now,
                    EventKind::PacketArrival { node: to, packet: ArrivedPacket::Data(pid) },
                );
                self.try_dispatch(from);
            }
            TxKind::Dissemination { coordinator, candidate, prev } => {
                for m in &candidate.group {
                    self.packets[pid as usize].holders.insert(*m);
                }
                self.start_coop(coordinator, pid, candidate, prev);
                self.try_dispatch(coordinator);
            }
            TxKind::Coop { candidate, .. } => {
                for m in &candidate.group {
                    self.nodes[*m as usize].witnessed.insert(flow, self.now);
                }
                self.queue.push(
                    self.now,
                    EventKind::PacketArrival {
                        node: candidate.next_hop,
                        packet: ArrivedPacket::Data(pid),
                    },
                );
                for m in candidate.group {
                    self.try_dispatch(m);
                }
            }
            TxKind::P2pHop { from, to } => {
                self.nodes[from as usize].witnessed.insert(flow, self.now);
                self.nodes[to as usize].witnessed.insert(flow, self.now);
                self.queue.push(
                    self.now,
                    EventKind::PacketArrival { node: to, packet: ArrivedPacket::Data(pid) },
                );
                self.try_dispatch(from);
            }
        }
    }

    fn on_data_arrival(&mut self, node: NodeId, pid: PacketId) {
        let packet = &mut self.packets[pid as usize];
        packet.holders.insert(node);
        let flow = packet.flow;
        let dest = packet.dest;
        let now = self.now;
        self.nodes[node as usize].witnessed.insert(flow, now);
        if node == dest {
            self.deliver(pid);
            return;
        }
        if self.cfg.protocol == Protocol::Undercover {
            // If this node is an acknowledged relay for the flow, it
            // coordinates the group transmission right away.
            if let Some(cand) = self.nodes[node as usize].relay_roles.get(&flow).cloned() {
                self.packets[pid as usize].state = PacketState::InFlight;
                self.start_dissemination(node, pid, cand, node);
                return;
            }
        }
        self.enqueue_packet(node, pid);
        self.try_dispatch(node);
    }

    // -- PU activity ------------------------------------------------------------

    fn on_pu_on(&mut self, pu: PuId) {
        self.pus[pu as usize].active = true;
        let pu_pos = self.pus[pu as usize].proc.position;
        // Destroy unprotected in-flight transmissions this PU overhears.
        let mut aborted: Vec<TxId> = Vec::new();
        for (id, tx) in self.txs.iter().enumerate() {
            if !tx.live || tx.protected.iter().any(|(p, _)| *p == pu) {
                continue;
            }
            let hit = tx
                .transmitters
                .iter()
                .any(|t| pu_pos.distance(&self.pos(*t)) <= self.cfg.pu_range);
            if hit {
                aborted.push(id as TxId);
            }
        }
        for id in aborted {
            self.abort_tx(id);
        }
    }

    fn abort_tx(&mut self, tx_id: TxId) {
        let tx = &mut self.txs[tx_id as usize];
        tx.live = false;
        tx.end = self.now;
        let pid = tx.packet;
        let kind = tx.kind.clone();
        let transmitters = tx.transmitters.clone();
        for t in transmitters {
            self.nodes[t as usize].busy_until = self.now;
        }
        let flow = self.packets[pid as usize].flow;
        match kind {
            TxKind::Handoff { from, .. } | TxKind::P2pHop { from, .. } => {
                self.nodes[from as usize].routes.remove(&flow);
            }
            TxKind::Dissemination { coordinator, prev, .. }
            | TxKind::Coop { candidate: LinkCandidate { coordinator, .. }, prev } => {
                self.nodes[prev as usize].routes.remove(&flow);
                self.nodes[coordinator as usize].relay_roles.remove(&flow);
            }
        }
        self.trace_push(TraceEvent::new(self.now, "abort").flow(flow));
        self.drop_packet(pid, "drop_pu_preempt");
    }

    fn on_pu_off(&mut self, pu: PuId) {
        self.pus[pu as usize].active = false;
        self.retry_stalled();
        self.dispatch_all_queued();
    }

    fn on_channel_refresh(&mut self) {
        // Cached next hops and candidate metrics are stale once the
        // coefficients change; flooding is channel-oblivious and keeps
        // its routes.
        if self.cfg.protocol != Protocol::CaodvLike {
            for node in &mut self.nodes {
                node.routes.clear();
                node.relay_roles.clear();
                node.offered.clear();
            }
        }
        self.retry_stalled();
        self.dispatch_all_queued();
    }

    fn retry_stalled(&mut self) {
        let stalled = std::mem::take(&mut self.stalled);
        for stage in stalled {
            match stage {
                StalledStage::Dissemination { coordinator, packet, candidate, prev } => {
                    if self.packets[packet as usize].state == PacketState::InFlight {
                        self.start_dissemination(coordinator, packet, candidate, prev);
                    }
                }
                StalledStage::Coop { coordinator, packet, candidate, prev } => {
                    if self.packets[packet as usize].state == PacketState::InFlight {
                        self.start_coop(coordinator, packet, candidate, prev);
                    }
                }
            }
        }
    }

    fn dispatch_all_queued(&mut self) {
        for id in 0..self.nodes.len() {
            if !self.nodes[id].queue.is_empty() {
                self.try_dispatch(id as NodeId);
            }
        }
    }

    // -- finalization -------------------------------------------------------------

    fn finish(mut self) -> SimOutput {
        for counts in self.m.flow_counts.values_mut() {
            counts.in_flight = counts.generated - counts.delivered - counts.dropped;
        }
        let window = self.cfg.horizon - self.warmup;
        let mut delays = std::mem::take(&mut self.m.delays);
        delays.sort_by(f64::total_cmp);
        let mean_delay = if delays.is_empty() {
            0.0
        } else {
            delays.iter().sum::<f64>() / delays.len() as f64
        };
        let mean_group = if self.m.group_sizes.is_empty() {
            1.0
        } else {
            self.m.group_sizes.iter().sum::<usize>() as f64 / self.m.group_sizes.len() as f64
        };
        let gain = match self.cfg.protocol {
            Protocol::Undercover => {
                if self.m.opportunities.is_empty() {
                    1.0
                } else {
                    self.m.opportunities.iter().sum::<usize>() as f64
                        / self.m.opportunities.len() as f64
                }
            }
            // Non-cooperative protocols have exactly one way to use each
            // available next hop.
            _ => 1.0,
        };
        let report = MetricsReport {
            goodput_bps: self.m.delivered_bits / window,
            mean_delay_s: mean_delay,
            delay_cdf: delays,
            control_packets: self.m.control_packets,
            mean_group_size: mean_group,
            routing_opportunities_gain: gain,
            mean_queue_len: self.m.queue_area / (window * self.cfg.num_sus as f64),
        };
        let audit = self.audit();
        SimOutput {
            report,
            audit,
            flow_counts: self.m.flow_counts,
            trace: self.trace,
        }
    }

    /// Post-hoc scan of every data transmission against every PU's ON
    /// intervals: any overlap with an in-range transmitter requires a
    /// verified null for that PU.
    fn audit(&self) -> AuditReport {
        let mut report = AuditReport::default();
        report.data_transmissions = self.txs.len() as u64;
        for tx in &self.txs {
            for (pid, pu) in self.pus.iter().enumerate() {
                let in_range = tx
                    .transmitters
                    .iter()
                    .any(|t| pu.proc.position.distance(&self.pos(*t)) <= self.cfg.pu_range);
                if !in_range {
                    continue;
                }
                let overlaps = pu
                    .on_intervals
                    .iter()
                    .any(|(s, e)| tx.start < *e && *s < tx.end);
                if !overlaps {
                    continue;
                }
                match tx.protected.iter().find(|(p, _)| *p == pid as PuId) {
                    Some((_, residual)) if *residual <= NULL_TOL => {
                        report.max_null_residual = report.max_null_residual.max(*residual);
                    }
                    _ => report.violations += 1,
                }
            }
        }
        report
    }
}
