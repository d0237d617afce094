use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cell::{cell_time_ns, Cell, CellKind, CELL_BITS};
use super::config::{MergeAlgorithm, MergeMode, SimConfig};
use super::merge::{MergeAction, MergePointState};
use super::queue::{MergeQueue, QueueUnit};
use super::rates::{AccountingKey, PortShares, SwitchRateState};
use super::source::SourceState;
use super::trace::Trace;
use crate::topology::{Endpoint, Network, PortId, SourceId, SwitchId, VcId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Downstream {
    Switch { sw: usize, in_port: PortId },
    Dest { link: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Upstream {
    Switch { sw: usize, out_port: PortId },
    Source(usize),
}

#[derive(Debug, Clone, Copy)]
struct Timing {
    tx_ns: u64,
    prop_ns: u64,
}

impl Timing {
    fn new(capacity: f64, prop_ns: u64) -> Self {
        Timing {
            tx_ns: cell_time_ns(capacity).round().max(1.0) as u64,
            prop_ns,
        }
    }

    fn latency(&self) -> u64 {
        self.tx_ns + self.prop_ns
    }
}

#[derive(Debug)]
enum Event {
    Emit { source: usize, generation: u64 },
    Arrive { sw: usize, in_port: PortId, cell: Cell },
    Deliver { link: usize, cell: Cell },
    TxDone { sw: usize, port: PortId },
    Backward { to: Upstream, cell: Cell },
    Tick,
}

struct Scheduled {
    time: u64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

#[derive(Default)]
struct Agenda {
    heap: BinaryHeap<Scheduled>,
    seq: u64,
}

impl Agenda {
    fn at(&mut self, time: u64, event: Event) {
        self.seq += 1;
        self.heap.push(Scheduled {
            time,
            seq: self.seq,
            event,
        });
    }
}

/// RM and data counts at one merge point (a VC with two or more branches
/// into one output port).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MergeCounters {
    pub switch: SwitchId,
    pub vc: VcId,
    pub out_port: PortId,
    pub branch_frm: BTreeMap<PortId, u64>,
    pub forwarded_frm: u64,
    /// Forward RM cells still buffered when the run ended.
    pub queued_frm: u64,
    /// Data cells entering from all branches, per interval.
    pub data_in: Vec<u64>,
    /// Data cells leaving on the output port, per interval.
    pub data_out: Vec<u64>,
    pub brm_copies: BTreeMap<PortId, u64>,
    /// Times a branch had received more BRM copies than it had sent FRMs.
    pub copy_excess: u64,
    /// Cells of another branch seen inside a packet on the output.
    pub interleavings: u64,
    current_in: u64,
    current_out: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceSummary {
    pub source: SourceId,
    /// Time-averaged ACR over the final quarter, Mbps.
    pub mean_rate: f64,
    /// Half the peak-to-peak swing of the windowed ACR, relative to the mean.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub from_ns: u64,
    pub sources: Vec<SourceSummary>,
}

impl SteadyState {
    pub fn rate(&self, source: &SourceId) -> Option<f64> {
        self.sources
            .iter()
            .find(|s| &s.source == source)
            .map(|s| s.mean_rate)
    }
}

/// Per-source rate measured at a switch port (VP merge only).
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchSourceRate {
    pub switch: SwitchId,
    pub port: PortId,
    pub source: SourceId,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortAccounting {
    pub switch: SwitchId,
    pub port: PortId,
    pub keys: Vec<(&'static str, AccountingKey)>,
}

/// Feedback timing seen by one source.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeedbackStats {
    /// Sum and count of delays from an FRM to the next BRM received.
    pub rtt_sum_ns: f64,
    pub rtt_count: u64,
    /// Sum and count of delays from an FRM to the first BRM whose
    /// feedback left the destination after that FRM was sent.
    pub age_sum_ns: f64,
    pub age_count: u64,
}

impl FeedbackStats {
    pub fn mean_rtt_us(&self) -> Option<f64> {
        (self.rtt_count > 0).then(|| self.rtt_sum_ns / self.rtt_count as f64 / 1000.0)
    }

    pub fn mean_age_us(&self) -> Option<f64> {
        (self.age_count > 0).then(|| self.age_sum_ns / self.age_count as f64 / 1000.0)
    }
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub config: SimConfig,
    pub trace: Trace,
    pub steady: Option<SteadyState>,
    /// A steady state exists and every source's amplitude is below 10%.
    pub converged: bool,
    pub sources: Vec<SourceId>,
    /// Per source, time-averaged ACR for each interval.
    pub acr_series: Vec<Vec<f64>>,
    pub merge_points: Vec<MergeCounters>,
    pub accounting: Vec<PortAccounting>,
    pub vp_source_rates: Vec<SwitchSourceRate>,
    pub feedback: Vec<FeedbackStats>,
    pub drops: u64,
    /// Mid-packet interleavings seen on any VC-merge output.
    pub interleavings: u64,
}

/// Oscillation amplitude bound for a run to count as converged.
pub const AMPLITUDE_TOLERANCE: f64 = 0.10;

struct OutPort {
    capacity: f64,
    timing: Timing,
    next: Downstream,
    vcs: Vec<usize>,
    queues: BTreeMap<usize, MergeQueue<PortId, Cell>>,
    rr: usize,
    busy: bool,
    rates: SwitchRateState,
    shares: PortShares,
    branches: BTreeMap<usize, Vec<PortId>>,
    merges: BTreeMap<usize, MergePointState>,
    counters: BTreeMap<usize, MergeCounters>,
    open_packet: BTreeMap<usize, Option<PortId>>,
    departed: u64,
}

impl OutPort {
    fn queued(&self) -> usize {
        self.queues.values().map(MergeQueue::len).sum()
    }
}

struct SwitchNode {
    id: SwitchId,
    outputs: BTreeMap<PortId, OutPort>,
    inputs: BTreeMap<PortId, (Upstream, Timing)>,
    /// Per VC: input port to output port.
    routes: Vec<BTreeMap<PortId, PortId>>,
}

struct SourceSim {
    id: SourceId,
    vc: usize,
    state: SourceState,
    first_hop: Downstream,
    timing: Timing,
    start_ns: u64,
    last_emit: u64,
    next_emit: f64,
    generation: u64,
    acr_since: u64,
    acr_area: f64,
    series: Vec<f64>,
    /// Switch index to the input port this source's path uses there.
    hops: BTreeMap<usize, PortId>,
    pending_rtt: VecDeque<u64>,
    pending_age: VecDeque<u64>,
    feedback: FeedbackStats,
}

impl SourceSim {
    fn integrate(&mut self, now: u64) {
        self.acr_area += self.state.acr * (now - self.acr_since) as f64;
        self.acr_since = now;
    }
}

/// A discrete-event run over one network.
pub struct Simulator<'n> {
    network: &'n Network,
    config: SimConfig,
    agenda: Agenda,
    now: u64,
    nodes: Vec<SwitchNode>,
    sources: Vec<SourceSim>,
    dest_links: Vec<(Upstream, Timing)>,
    trace: Trace,
    nrm: u32,
    /// Feedback statistics only cover FRMs sent from this time on.
    pub stats_from_ns: u64,
}

impl<'n> Simulator<'n> {
    pub fn new(network: &'n Network, config: &SimConfig) -> Self {
        let topo = network.topology();
        let switch_ids: Vec<SwitchId> = topo.switches().cloned().collect();
        let sw_index = |id: &SwitchId| switch_ids.iter().position(|s| s == id).expect("validated switch");
        let prop_ns = config.prop_delay_ns;

        let mut nodes: Vec<SwitchNode> = switch_ids
            .iter()
            .map(|id| SwitchNode {
                id: id.clone(),
                outputs: BTreeMap::new(),
                inputs: BTreeMap::new(),
                routes: network.vcs().iter().map(|_| BTreeMap::new()).collect(),
            })
            .collect();
        let mut dest_links = Vec::new();
        let mut source_links: BTreeMap<SourceId, (Downstream, Timing)> = BTreeMap::new();

        let downstream_of = |to: &Endpoint,
                             dest_links: &mut Vec<(Upstream, Timing)>,
                             up: Upstream,
                             timing: Timing| match to {
            Endpoint::Switch { switch, port } => Downstream::Switch {
                sw: sw_index(switch),
                in_port: *port,
            },
            _ => {
                dest_links.push((up, timing));
                Downstream::Dest {
                    link: dest_links.len() - 1,
                }
            }
        };

        for link in topo.links() {
            let capacity = link.capacity.to_f64();
            let timing = Timing::new(capacity, prop_ns);
            match &link.from {
                Endpoint::Switch { switch, port } => {
                    let sw = sw_index(switch);
                    let up = Upstream::Switch { sw, out_port: *port };
                    let next = downstream_of(&link.to, &mut dest_links, up, timing);
                    if let Downstream::Switch { sw: dsw, in_port } = next {
                        nodes[dsw].inputs.insert(in_port, (up, timing));
                    }
                    let target = config.utilization * capacity;
                    nodes[sw].outputs.insert(
                        *port,
                        OutPort {
                            capacity,
                            timing,
                            next,
                            vcs: Vec::new(),
                            queues: BTreeMap::new(),
                            rr: 0,
                            busy: false,
                            rates: SwitchRateState::new(config.merge_mode, config.window),
                            shares: PortShares::initial(target),
                            branches: BTreeMap::new(),
                            merges: BTreeMap::new(),
                            counters: BTreeMap::new(),
                            open_packet: BTreeMap::new(),
                            departed: 0,
                        },
                    );
                }
                Endpoint::Source(s) => {
                    if let Endpoint::Switch { switch, port } = &link.to {
                        let sw = sw_index(switch);
                        source_links.insert(s.clone(), (Downstream::Switch { sw, in_port: *port }, timing));
                    }
                }
                Endpoint::Dest(_) => {}
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut sources = Vec::new();
        for (i, id) in network.sources().iter().enumerate() {
            let sc = config.effective_source(network, id);
            let state = SourceState::new(&sc, config.packet_cells);
            let (first_hop, timing) = source_links[id];
            if let Downstream::Switch { sw, in_port } = first_hop {
                nodes[sw].inputs.insert(in_port, (Upstream::Source(i), timing));
            }
            let jitter = if config.start_jitter {
                let period = f64::from(sc.nrm) * state.gap_ns();
                rng.gen_range(0.0..period.max(1.0))
            } else {
                0.0
            };
            let start = sc.start_ns + jitter as u64;
            let hops = network
                .path(id)
                .expect("validated source has a path")
                .hops
                .iter()
                .map(|h| (sw_index(&h.switch), h.in_port))
                .collect();
            sources.push(SourceSim {
                id: id.clone(),
                vc: network.vc_index_of(id).expect("validated source has a VC"),
                state,
                first_hop,
                timing,
                start_ns: start,
                last_emit: start,
                next_emit: start as f64,
                generation: 0,
                acr_since: 0,
                acr_area: 0.0,
                series: Vec::new(),
                hops,
                pending_rtt: VecDeque::new(),
                pending_age: VecDeque::new(),
                feedback: FeedbackStats::default(),
            });
        }

        for (v, vc) in network.vcs().iter().enumerate() {
            let pcr = vc
                .sources
                .iter()
                .map(|s| config.effective_source(network, s).pcr)
                .fold(0.0, f64::max);
            for (switch, table) in &vc.routes {
                let node = &mut nodes[sw_index(switch)];
                for (&in_port, &out_port) in table {
                    node.routes[v].insert(in_port, out_port);
                    if let Some(port) = node.outputs.get_mut(&out_port) {
                        port.branches.entry(v).or_default().push(in_port);
                    }
                }
                for (&out_port, port) in node.outputs.iter_mut() {
                    let Some(branches) = port.branches.get(&v) else {
                        continue;
                    };
                    if !port.vcs.contains(&v) {
                        port.vcs.push(v);
                        port.queues.insert(
                            v,
                            MergeQueue::new(config.merge_mode == MergeMode::VcMerge, config.queue_limit),
                        );
                        port.open_packet.insert(v, None);
                    }
                    if branches.len() >= 2 && !port.counters.contains_key(&v) {
                        if config.merge_mode == MergeMode::VcMerge {
                            port.merges.insert(
                                v,
                                MergePointState::new(config.merge_alg, branches, pcr, config.mer_update),
                            );
                        }
                        port.counters.insert(
                            v,
                            MergeCounters {
                                switch: node.id.clone(),
                                vc: vc.id.clone(),
                                out_port,
                                branch_frm: branches.iter().map(|&b| (b, 0)).collect(),
                                brm_copies: branches.iter().map(|&b| (b, 0)).collect(),
                                ..Default::default()
                            },
                        );
                    }
                }
            }
        }
        for node in &mut nodes {
            for port in node.outputs.values_mut() {
                port.vcs.sort_unstable();
            }
        }

        Simulator {
            network,
            config: config.clone(),
            agenda: Agenda::default(),
            now: 0,
            nodes,
            sources,
            dest_links,
            trace: Trace::default(),
            nrm: config.default_source.nrm,
            stats_from_ns: config.duration_ns / 2,
        }
    }

    pub fn rate_states(&self) -> impl Iterator<Item = (&SwitchId, PortId, &SwitchRateState)> {
        self.nodes
            .iter()
            .flat_map(|n| n.outputs.iter().map(move |(&p, port)| (&n.id, p, &port.rates)))
    }

    pub fn run(mut self) -> SimulationResult {
        let duration = self.config.duration_ns;
        if duration > 0 {
            for i in 0..self.sources.len() {
                let start = self.sources[i].start_ns;
                self.agenda.at(
                    start,
                    Event::Emit {
                        source: i,
                        generation: 0,
                    },
                );
            }
            self.agenda.at(self.config.interval_ns, Event::Tick);
        }
        while let Some(next) = self.agenda.heap.pop() {
            if next.time > duration {
                break;
            }
            self.now = next.time;
            self.handle(next.event);
        }
        self.finish()
    }

    fn handle(&mut self, event: Event) {
        match event {
            Event::Emit { source, generation } => self.emit(source, generation),
            Event::Arrive { sw, in_port, cell } => self.arrive(sw, in_port, cell),
            Event::Deliver { link, cell } => self.deliver(link, cell),
            Event::TxDone { sw, port } => {
                if let Some(p) = self.nodes[sw].outputs.get_mut(&port) {
                    p.busy = false;
                }
                self.start_tx(sw, port);
            }
            Event::Backward { to, cell } => match to {
                Upstream::Switch { sw, out_port } => self.backward_at_switch(sw, out_port, cell),
                Upstream::Source(i) => self.backward_at_source(i, cell),
            },
            Event::Tick => self.tick(),
        }
    }

    fn emit(&mut self, i: usize, generation: u64) {
        let now = self.now;
        let stats_from = self.stats_from_ns;
        let src = &mut self.sources[i];
        if generation != src.generation {
            return;
        }
        match src.state.next_cell(src.vc, i, now) {
            Some(cell) => {
                if cell.kind == CellKind::Frm && now >= stats_from {
                    src.pending_rtt.push_back(now);
                    src.pending_age.push_back(now);
                }
                let arrival = now + src.timing.latency();
                if let Downstream::Switch { sw, in_port } = src.first_hop {
                    self.agenda.at(arrival, Event::Arrive { sw, in_port, cell });
                }
                src.last_emit = now;
                src.next_emit = src.next_emit.max(now as f64) + src.state.gap_ns();
            }
            None => src.next_emit = (now + self.config.interval_ns) as f64,
        }
        let at = src.next_emit.round() as u64;
        self.agenda.at(
            at.max(now + 1),
            Event::Emit {
                source: i,
                generation,
            },
        );
    }

    fn arrive(&mut self, sw: usize, in_port: PortId, cell: Cell) {
        let now = self.now;
        let node = &mut self.nodes[sw];
        let Some(&out) = node.routes[cell.vc].get(&in_port) else {
            return;
        };
        let port = node.outputs.get_mut(&out).expect("route leads to an output port");
        port.rates.on_cell(&cell, in_port, now, self.nrm);
        if let Some(c) = port.counters.get_mut(&cell.vc) {
            match cell.kind {
                CellKind::Frm => *c.branch_frm.entry(in_port).or_default() += 1,
                CellKind::Data { .. } => c.current_in += 1,
                CellKind::Brm => {}
            }
        }
        let actions = match (cell.kind, port.merges.get_mut(&cell.vc)) {
            (CellKind::Frm, Some(m)) => m.on_frm(in_port),
            _ => Vec::new(),
        };
        let vc = cell.vc;
        let template = cell.clone();
        port.queues
            .get_mut(&vc)
            .expect("queue per routed VC")
            .enqueue(in_port, cell);
        for MergeAction::SendBrm {
            branch,
            er,
            root_time,
        } in actions
        {
            let brm = Cell {
                kind: CellKind::Brm,
                er,
                root_time,
                ..template.clone()
            };
            self.send_backward(sw, out, branch, brm);
        }
        self.start_tx(sw, out);
    }

    fn start_tx(&mut self, sw: usize, out: PortId) {
        let vc_merge = self.config.merge_mode == MergeMode::VcMerge;
        let port = self.nodes[sw].outputs.get_mut(&out).expect("port exists");
        if port.busy || port.vcs.is_empty() {
            return;
        }
        let n = port.vcs.len();
        let mut picked = None;
        for k in 0..n {
            let idx = (port.rr + k) % n;
            let vc = port.vcs[idx];
            let q = port.queues.get_mut(&vc).expect("queue per routed VC");
            if q.has_ready() {
                picked = q.dequeue().map(|(flow, cell)| (idx, flow, cell));
                break;
            }
        }
        let Some((idx, flow, cell)) = picked else {
            return;
        };
        port.rr = idx + 1;
        port.busy = true;
        port.departed += 1;
        let vc = cell.vc;
        if let Some(c) = port.counters.get_mut(&vc) {
            match cell.kind {
                CellKind::Frm => c.forwarded_frm += 1,
                CellKind::Data { .. } => c.current_out += 1,
                CellKind::Brm => {}
            }
            if vc_merge {
                let open = port.open_packet.entry(vc).or_default();
                match open {
                    Some(f) if *f != flow => c.interleavings += 1,
                    _ => *open = (!cell.closes_unit()).then_some(flow),
                }
            }
        }
        let timing = port.timing;
        let next = port.next;
        let now = self.now;
        self.agenda
            .at(now + timing.tx_ns, Event::TxDone { sw, port: out });
        let arrival = now + timing.latency();
        match next {
            Downstream::Switch { sw, in_port } => {
                self.agenda.at(arrival, Event::Arrive { sw, in_port, cell })
            }
            Downstream::Dest { link } => self.agenda.at(arrival, Event::Deliver { link, cell }),
        }
    }

    fn deliver(&mut self, link: usize, cell: Cell) {
        if cell.kind != CellKind::Frm {
            return;
        }
        let (up, timing) = self.dest_links[link];
        let brm = Cell {
            kind: CellKind::Brm,
            root_time: Some(self.now),
            ..cell
        };
        self.agenda
            .at(self.now + timing.latency(), Event::Backward { to: up, cell: brm });
    }

    /// Stamp `cell` at port `out` of switch `sw` and send it down `branch`.
    fn send_backward(&mut self, sw: usize, out: PortId, branch: PortId, mut cell: Cell) {
        let policy = self.config.policy;
        let bitmark = self.config.merge_alg == MergeAlgorithm::BitMark;
        let node = &mut self.nodes[sw];
        let port = node.outputs.get_mut(&out).expect("port exists");
        cell.er = port.shares.stamp(policy, cell.vc, cell.er);
        if bitmark {
            if let Some(c) = port.counters.get_mut(&cell.vc) {
                let copies = c.brm_copies.entry(branch).or_default();
                *copies += 1;
                if *copies > c.branch_frm.get(&branch).copied().unwrap_or(0) {
                    c.copy_excess += 1;
                }
            }
        }
        let Some(&(up, timing)) = node.inputs.get(&branch) else {
            return;
        };
        self.agenda
            .at(self.now + timing.latency(), Event::Backward { to: up, cell });
    }

    fn backward_at_switch(&mut self, sw: usize, out: PortId, cell: Cell) {
        let vc_merge = self.config.merge_mode == MergeMode::VcMerge;
        let port = self.nodes[sw].outputs.get_mut(&out).expect("port exists");
        if let Some(m) = port.merges.get_mut(&cell.vc) {
            for MergeAction::SendBrm {
                branch,
                er,
                root_time,
            } in m.on_brm(cell.er, cell.root_time)
            {
                let copy = Cell {
                    er,
                    root_time,
                    ..cell.clone()
                };
                self.send_backward(sw, out, branch, copy);
            }
            return;
        }
        let branch = if vc_merge {
            port.branches.get(&cell.vc).and_then(|b| b.first().copied())
        } else {
            self.sources[cell.origin].hops.get(&sw).copied()
        };
        if let Some(branch) = branch {
            self.send_backward(sw, out, branch, cell);
        }
    }

    fn backward_at_source(&mut self, i: usize, cell: Cell) {
        let now = self.now;
        let src = &mut self.sources[i];
        src.integrate(now);
        src.state.on_brm(cell.er);
        while let Some(t) = src.pending_rtt.pop_front() {
            src.feedback.rtt_sum_ns += (now - t) as f64;
            src.feedback.rtt_count += 1;
        }
        if let Some(root) = cell.root_time {
            while src.pending_age.front().is_some_and(|&t| t <= root) {
                let t = src.pending_age.pop_front().expect("front exists");
                src.feedback.age_sum_ns += (now - t) as f64;
                src.feedback.age_count += 1;
            }
        }
        // A faster rate takes effect from the last emission.
        if now >= src.start_ns {
            let sooner = src.last_emit as f64 + src.state.gap_ns();
            if sooner < src.next_emit {
                src.next_emit = sooner.max(now as f64);
                src.generation += 1;
                let at = (src.next_emit.round() as u64).max(now);
                let generation = src.generation;
                self.agenda.at(
                    at,
                    Event::Emit {
                        source: i,
                        generation,
                    },
                );
            }
        }
    }

    fn tick(&mut self) {
        let now = self.now;
        let cfg = &self.config;
        let interval = cfg.interval_ns;
        let window_ns = interval * u64::from(cfg.window);
        let record = cfg.record_trace;

        for src in &mut self.sources {
            src.integrate(now);
            let avg = src.acr_area / interval as f64;
            src.acr_area = 0.0;
            src.series.push(avg);
            if record {
                self.trace.push(now, "source", src.id.as_str(), "acr", avg);
            }
        }

        for node in &mut self.nodes {
            for (&p, port) in node.outputs.iter_mut() {
                let queued = port.queued();
                let q_bits = queued as f64 * CELL_BITS;
                let full = cfg.utilization * port.capacity;
                let target = (full - q_bits * 1000.0 / cfg.queue_drain_ns as f64).max(0.5 * full);
                port.rates.roll(now, window_ns, interval);
                port.shares = port.rates.shares(target, now, window_ns, interval);
                for c in port.counters.values_mut() {
                    c.data_in.push(std::mem::take(&mut c.current_in));
                    c.data_out.push(std::mem::take(&mut c.current_out));
                }
                if record {
                    let id = format!("{}:{}", node.id, p);
                    let load = port.departed as f64 * CELL_BITS * 1000.0 / interval as f64;
                    self.trace.push(now, "port", id.clone(), "load", load);
                    self.trace.push(now, "port", id.clone(), "queue", queued as f64);
                    self.trace
                        .push(now, "port", id.clone(), "share", port.shares.source_level);
                    for (vc, m) in &port.merges {
                        if let Some(mer) = m.mer() {
                            let mid = format!("{}:{}:{}", node.id, p, self.network.vcs()[*vc].id);
                            self.trace.push(now, "merge", mid, "mer", mer);
                        }
                    }
                }
                port.departed = 0;
            }
        }

        let next = now + interval;
        if next <= cfg.duration_ns {
            self.agenda.at(next, Event::Tick);
        }
    }

    fn finish(mut self) -> SimulationResult {
        let cfg = &self.config;
        let mut merge_points = Vec::new();
        let mut accounting = Vec::new();
        let mut vp_source_rates = Vec::new();
        let mut drops = 0;
        let mut interleavings = 0;
        for node in &mut self.nodes {
            for (&p, port) in node.outputs.iter_mut() {
                accounting.push(PortAccounting {
                    switch: node.id.clone(),
                    port: p,
                    keys: port.rates.keys(),
                });
                if let Some(rates) = port.rates.source_rates(cfg.interval_ns) {
                    for (s, rate) in rates {
                        vp_source_rates.push(SwitchSourceRate {
                            switch: node.id.clone(),
                            port: p,
                            source: self.sources[s].id.clone(),
                            rate,
                        });
                    }
                }
                drops += port.queues.values().map(|q| q.drops).sum::<u64>();
                for (vc, c) in port.counters.iter_mut() {
                    c.queued_frm = port.queues[vc]
                        .items()
                        .filter(|cell| cell.kind == CellKind::Frm)
                        .count() as u64;
                    interleavings += c.interleavings;
                    merge_points.push(c.clone());
                }
            }
        }
        let steady = steady_state(&self.sources, cfg);
        let converged = steady.as_ref().is_some_and(|s| {
            s.sources
                .iter()
                .all(|x| x.mean_rate > 0.0 && x.amplitude < AMPLITUDE_TOLERANCE)
        });
        SimulationResult {
            config: self.config.clone(),
            trace: std::mem::take(&mut self.trace),
            steady,
            converged,
            sources: self.sources.iter().map(|s| s.id.clone()).collect(),
            acr_series: self.sources.iter().map(|s| s.series.clone()).collect(),
            merge_points,
            accounting,
            vp_source_rates,
            feedback: self.sources.iter().map(|s| s.feedback.clone()).collect(),
            drops,
            interleavings,
        }
    }
}

/// Mean ACR over the final quarter of the run, and oscillation amplitude of
/// the ACR averaged over measurement windows within it.
fn steady_state(sources: &[SourceSim], cfg: &SimConfig) -> Option<SteadyState> {
    let n = sources.first().map(|s| s.series.len()).unwrap_or(0);
    if n < 4 {
        return None;
    }
    let from = n - n / 4;
    let window = cfg.window.max(1) as usize;
    let summaries = sources
        .iter()
        .map(|s| {
            let tail = &s.series[from..];
            let mean = tail.iter().sum::<f64>() / tail.len() as f64;
            let chunk = if tail.len() >= 2 * window { window } else { 1 };
            let averages: Vec<f64> = tail
                .rchunks_exact(chunk)
                .map(|c| c.iter().sum::<f64>() / c.len() as f64)
                .collect();
            let hi = averages.iter().copied().fold(f64::MIN, f64::max);
            let lo = averages.iter().copied().fold(f64::MAX, f64::min);
            let amplitude = if mean > 0.0 {
                (hi - lo) / 2.0 / mean
            } else {
                f64::INFINITY
            };
            SourceSummary {
                source: s.id.clone(),
                mean_rate: mean,
                amplitude,
            }
        })
        .collect();
    Some(SteadyState {
        from_ns: from as u64 * cfg.interval_ns,
        sources: summaries,
    })
}

pub fn run_simulation(network: &Network, config: &SimConfig) -> SimulationResult {
    Simulator::new(network, config).run()
}
