use std::collections::VecDeque;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::drr::DrrScheduler;
use super::queues::{wfq_weights, PiggybackCursor, QueueInfoEma, DEFAULT_PORT_QUEUE};
use super::split::{hash_index, solve_split, split_fractions, switch_hash};
use crate::error::SimError;
use crate::network::{Algorithm, CommodityId, ScenarioConfig, SwitchId, Topology};

/// RNG stream for flow start slots and hash fields (arrival sources use
/// streams derived from switch and commodity ids, all below this).
const FLOW_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowState {
    Pending,
    Active,
    Done,
}

/// Packets a flow handed from `switch` to `next`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopCount {
    pub switch: SwitchId,
    pub next: SwitchId,
    pub packets: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub id: u32,
    pub source: SwitchId,
    pub commodity: CommodityId,
    pub size: u64,
    pub start: u64,
    pub hash_field: u64,
    /// Congestion window at the end of the run.
    pub window: u64,
    pub state: FlowState,
    pub completion: Option<u64>,
    pub delivered: u64,
    pub retransmits: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Distinct switch sequences seen by delivered packets, first seen first.
    pub paths: Vec<u64>,
    pub hops: Vec<HopCount>,
}

impl FlowRecord {
    pub fn fct(&self) -> Option<u64> {
        self.completion.map(|c| c - self.start)
    }

    /// Order-independent digest of the paths this flow used.
    pub fn path_digest(&self) -> String {
        let mut ps = self.paths.clone();
        ps.sort_unstable();
        format!("{:016x}", ps.iter().fold(FNV_OFFSET, |h, &p| fold(h, p)))
    }

    /// Whether packets of this flow took more than one path.
    pub fn remapped(&self) -> bool {
        self.paths.len() > 1
    }

    /// Packets handed from any of `at` to `next`.
    pub fn forwarded(&self, at: &[SwitchId], next: SwitchId) -> u64 {
        self.hops
            .iter()
            .filter(|h| h.next == next && at.contains(&h.switch))
            .map(|h| h.packets)
            .sum()
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

fn fold(h: u64, v: u64) -> u64 {
    let mut h = h;
    for b in v.to_le_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Run-level numbers that go into the metrics JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub scenario: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub config_digest: String,
    pub slots_run: u64,
    pub flows: usize,
    pub completed: usize,
    pub drops: u64,
    pub retransmits: u64,
    pub remapped_flows: usize,
    pub fct_mean: Option<f64>,
    pub fct_variance: Option<f64>,
    pub fct_p99: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSimReport {
    pub summary: FlowSummary,
    pub flows: Vec<FlowRecord>,
}

impl FlowSimReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summaries always serialize");
        s.push('\n');
        s
    }
}

/// Mean and population variance of the completed flows' FCTs.
pub fn fct_stats(flows: &[FlowRecord]) -> Option<(f64, f64)> {
    let fcts: Vec<f64> = flows.iter().filter_map(|f| f.fct()).map(|x| x as f64).collect();
    if fcts.is_empty() {
        return None;
    }
    let n = fcts.len() as f64;
    let mean = fcts.iter().sum::<f64>() / n;
    let var = fcts.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var))
}

/// Among flows that sent packets from `at` to any of `choices`, the fraction
/// whose majority of those packets went to `via` (ties count against).
pub fn via_share(flows: &[FlowRecord], at: &[SwitchId], choices: &[SwitchId], via: SwitchId) -> Option<f64> {
    let (mut n, mut hit) = (0usize, 0usize);
    for f in flows {
        let total: u64 = choices.iter().map(|&j| f.forwarded(at, j)).sum();
        if total == 0 {
            continue;
        }
        n += 1;
        if 2 * f.forwarded(at, via) > total {
            hit += 1;
        }
    }
    (n > 0).then(|| hit as f64 / n as f64)
}

pub fn write_fct_csv<W: Write>(flows: &[FlowRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "flow_id",
        "commodity",
        "source",
        "start",
        "completion",
        "fct",
        "retransmits",
        "path_digest",
    ])?;
    let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    for f in flows {
        w.write_record([
            f.id.to_string(),
            f.commodity.0.to_string(),
            f.source.0.to_string(),
            f.start.to_string(),
            opt(f.completion),
            opt(f.fct()),
            f.retransmits.to_string(),
            f.path_digest(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Packet {
    flow: u32,
    commodity: usize,
    path: u64,
    /// Piggybacked `(commodity, queue info)` set when the packet leaves a port.
    info: Option<(usize, u64)>,
}

const NO_SLOT: usize = usize::MAX;

struct Port {
    from: usize,
    to: usize,
    capacity: u64,
    reserved: u64,
    reserve_start: u64,
    up: bool,
    /// Commodity indices carried by this port, ascending.
    comms: Vec<usize>,
    /// Commodity index -> position in `comms`.
    slot: Vec<usize>,
    queues: Vec<VecDeque<Packet>>,
    fifo: VecDeque<Packet>,
    backlog: Vec<u64>,
    sent: Vec<u64>,
    memory: Vec<u64>,
    drr: DrrScheduler,
    cursor: PiggybackCursor,
    reverse: Option<usize>,
}

impl Port {
    fn capacity_at(&self, t: u64) -> u64 {
        if !self.up {
            return 0;
        }
        let r = if t >= self.reserve_start { self.reserved } else { 0 };
        self.capacity.saturating_sub(r)
    }
}

#[derive(Clone, Default)]
struct Route {
    ports: Vec<usize>,
    fractions: Vec<f64>,
}

struct Sink {
    rate: u64,
    queue: VecDeque<Packet>,
}

struct FlowRun {
    window: u64,
    quota: u64,
    outstanding: u64,
    drops: u64,
    in_epoch: bool,
    next_epoch: u64,
}

struct FlowSim<'a> {
    config: &'a ScenarioConfig,
    heuristic: bool,
    switches: Vec<SwitchId>,
    commodities: Vec<CommodityId>,
    topology: Topology,
    ports: Vec<Port>,
    port_index: Vec<Vec<(usize, usize)>>,
    routes: Vec<Route>,
    sinks: Vec<Option<Sink>>,
    ema: Vec<QueueInfoEma>,
    info: Vec<u64>,
    qcap: u64,
    fifo_cap: u64,
    records: Vec<FlowRecord>,
    runs: Vec<FlowRun>,
    active: Vec<u32>,
    drops: u64,
    served: Vec<u64>,
}

/// Runs the flow-level simulator for a `heuristic` or `ecmp` scenario.
pub fn run_flow_sim(config: &ScenarioConfig) -> Result<FlowSimReport, SimError> {
    let heuristic = match config.algorithm {
        Algorithm::Heuristic => true,
        Algorithm::Ecmp => false,
        other => {
            return Err(SimError::Unsupported(format!(
                "{other} runs on the slotted simulator, not the flow simulator"
            )))
        }
    };
    let workload = config
        .flows
        .as_ref()
        .ok_or_else(|| SimError::Unsupported("flow simulation needs a flows block".into()))?;
    let mut sim = FlowSim::new(config, heuristic);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(FLOW_STREAM);
    let [lo, hi] = workload.start_window;
    for g in &workload.groups {
        for _ in 0..g.count {
            let start = if hi > lo { rng.gen_range(lo..hi) } else { lo };
            let hash_field: u64 = rng.gen();
            sim.records.push(FlowRecord {
                id: sim.records.len() as u32,
                source: g.source,
                commodity: g.commodity,
                size: g.size,
                start,
                hash_field,
                window: workload.initial_window,
                state: FlowState::Pending,
                completion: None,
                delivered: 0,
                retransmits: 0,
                label: g.label.clone(),
                paths: Vec::new(),
                hops: Vec::new(),
            });
            sim.runs.push(FlowRun {
                window: workload.initial_window,
                quota: 0,
                outstanding: 0,
                drops: 0,
                in_epoch: false,
                next_epoch: start,
            });
        }
    }
    let mut pending: Vec<u32> = (0..sim.records.len() as u32).collect();
    pending.sort_by_key(|&f| (sim.records[f as usize].start, f));
    let mut pending = pending.into_iter().peekable();

    let mut slots_run = 0;
    for t in 0..config.horizon {
        slots_run = t + 1;
        for f in config.events.link_failures.iter().filter(|f| f.slot == t) {
            sim.fail_link(f.a, f.b);
        }
        if t % config.interval == 0 {
            sim.reconfigure();
        }
        while let Some(&f) = pending.peek() {
            if sim.records[f as usize].start > t {
                break;
            }
            pending.next();
            sim.records[f as usize].state = FlowState::Active;
            sim.active.push(f);
        }
        sim.inject(t, workload.nic_rate);
        let transit = sim.serve_ports(t);
        sim.serve_sinks(t);
        for (to, from, p) in transit {
            sim.arrive(to, from, p);
        }
        sim.settle_epochs(t, workload.ack_delay);
        sim.update_info();
        if sim.active.is_empty() && pending.peek().is_none() {
            break;
        }
    }

    for (r, run) in sim.records.iter_mut().zip(&sim.runs) {
        r.window = run.window;
    }
    let flows = sim.records;
    let stats = fct_stats(&flows);
    let mut fcts: Vec<u64> = flows.iter().filter_map(|f| f.fct()).collect();
    fcts.sort_unstable();
    let p99 = (!fcts.is_empty()).then(|| fcts[((fcts.len() as f64 * 0.99).ceil() as usize).clamp(1, fcts.len()) - 1]);
    let summary = FlowSummary {
        scenario: config.name.clone(),
        algorithm: config.algorithm,
        seed: config.seed,
        config_digest: config.digest(),
        slots_run,
        flows: flows.len(),
        completed: flows.iter().filter(|f| f.state == FlowState::Done).count(),
        drops: sim.drops,
        retransmits: flows.iter().map(|f| f.retransmits).sum(),
        remapped_flows: flows.iter().filter(|f| f.remapped()).count(),
        fct_mean: stats.map(|s| s.0),
        fct_variance: stats.map(|s| s.1),
        fct_p99: p99,
    };
    Ok(FlowSimReport { summary, flows })
}

impl<'a> FlowSim<'a> {
    fn new(config: &'a ScenarioConfig, heuristic: bool) -> Self {
        let topology = config.topology.clone();
        let switches: Vec<SwitchId> = topology.switches.iter().copied().collect();
        let commodities: Vec<CommodityId> = topology.destinations.iter().copied().collect();
        let (ns, nd) = (switches.len(), commodities.len());
        let si = |s: SwitchId| switches.binary_search(&s).expect("known switch");
        let derived = crate::network::derive_sets(&topology);

        let mut ports = Vec::new();
        let mut port_index = vec![Vec::new(); ns];
        for (i, j, c) in topology.links() {
            let comms: Vec<usize> = derived
                .link_commodities(i, j)
                .iter()
                .map(|d| commodities.binary_search(d).expect("known commodity"))
                .collect();
            let mut slot = vec![NO_SLOT; nd];
            for (k, &d) in comms.iter().enumerate() {
                slot[d] = k;
            }
            let reservation = config.events.priority.iter().find(|p| p.from == i && p.to == j);
            let n = comms.len();
            port_index[si(i)].push((si(j), ports.len()));
            ports.push(Port {
                from: si(i),
                to: si(j),
                capacity: c,
                reserved: reservation.map_or(0, |p| p.rate),
                reserve_start: reservation.map_or(0, |p| p.start),
                up: true,
                comms,
                slot,
                queues: vec![VecDeque::new(); n],
                fifo: VecDeque::new(),
                backlog: vec![0; n],
                sent: vec![0; n],
                memory: vec![0; n],
                drr: DrrScheduler::new(n),
                cursor: PiggybackCursor::default(),
                reverse: None,
            });
        }
        for p in 0..ports.len() {
            let (a, b) = (ports[p].from, ports[p].to);
            ports[p].reverse = port_index[b].iter().find(|&&(to, _)| to == a).map(|&(_, q)| q);
        }

        let mut sinks: Vec<Option<Sink>> = Vec::with_capacity(ns * nd);
        for &i in &switches {
            for &d in &commodities {
                let rate = topology.sink_capacity(i, d);
                sinks.push((rate > 0).then(|| Sink {
                    rate,
                    queue: VecDeque::new(),
                }));
            }
        }
        let qcap = config.queue_capacity.unwrap_or(DEFAULT_PORT_QUEUE);
        let mut sim = FlowSim {
            config,
            heuristic,
            switches,
            commodities,
            topology,
            ports,
            port_index,
            routes: vec![Route::default(); ns * nd],
            sinks,
            ema: vec![QueueInfoEma::new(config.ema_beta); ns * nd],
            info: vec![0; ns * nd],
            qcap,
            fifo_cap: qcap * nd as u64,
            records: Vec::new(),
            runs: Vec::new(),
            active: Vec::new(),
            drops: 0,
            served: Vec::new(),
        };
        sim.rebuild_routes();
        sim
    }

    fn nd(&self) -> usize {
        self.commodities.len()
    }

    fn port_to(&self, i: usize, j: usize) -> Option<usize> {
        self.port_index[i].iter().find(|&&(to, _)| to == j).map(|&(_, p)| p)
    }

    /// Routes from the current topology; surviving split fractions are kept
    /// (renormalized) under the heuristic.
    fn rebuild_routes(&mut self) {
        let nd = self.nd();
        for (ii, &i) in self.switches.iter().enumerate() {
            for (di, &d) in self.commodities.iter().enumerate() {
                let k = ii * nd + di;
                let old = std::mem::take(&mut self.routes[k]);
                let mut route = Route::default();
                for &j in self.topology.next_hops(i, d) {
                    let jj = self.switches.binary_search(&j).expect("known switch");
                    if let Some(p) = self.port_to(ii, jj).filter(|&p| self.ports[p].up) {
                        route.ports.push(p);
                        let f = old
                            .ports
                            .iter()
                            .position(|&q| q == p)
                            .map_or(0.0, |n| old.fractions[n]);
                        route.fractions.push(f);
                    }
                }
                let total: f64 = route.fractions.iter().sum();
                let n = route.fractions.len();
                if !self.heuristic || total <= 0.0 {
                    route.fractions = vec![1.0 / n as f64; n];
                } else {
                    route.fractions.iter_mut().for_each(|f| *f /= total);
                }
                self.routes[k] = route;
            }
        }
    }

    fn fail_link(&mut self, a: SwitchId, b: SwitchId) {
        self.topology = self.topology.without_link(a, b);
        let (ai, bi) = (
            self.switches.binary_search(&a).expect("known switch"),
            self.switches.binary_search(&b).expect("known switch"),
        );
        for p in [self.port_to(ai, bi), self.port_to(bi, ai)].into_iter().flatten() {
            self.ports[p].up = false;
            let mut lost: Vec<Packet> = self.ports[p].fifo.drain(..).collect();
            for q in self.ports[p].queues.iter_mut() {
                lost.extend(q.drain(..));
            }
            self.ports[p].backlog.iter_mut().for_each(|x| *x = 0);
            for pkt in lost {
                self.drop_packet(pkt);
            }
        }
        self.rebuild_routes();
    }

    fn q_tilde(&self, i: usize, d: usize) -> u64 {
        let k = i * self.nd() + d;
        let ports: u64 = self.routes[k]
            .ports
            .iter()
            .map(|&p| self.ports[p].backlog[self.ports[p].slot[d]])
            .sum();
        ports + self.sinks[k].as_ref().map_or(0, |s| s.queue.len() as u64)
    }

    fn reconfigure(&mut self) {
        if self.heuristic {
            let nd = self.nd();
            for k in 0..self.routes.len() {
                let d = k % nd;
                if self.routes[k].ports.len() < 2 {
                    continue;
                }
                let (q, r): (Vec<u64>, Vec<u64>) = self.routes[k]
                    .ports
                    .iter()
                    .map(|&p| {
                        let port = &self.ports[p];
                        (port.backlog[port.slot[d]], port.sent[port.slot[d]])
                    })
                    .unzip();
                self.routes[k].fractions = split_fractions(&solve_split(&q, &r));
            }
            for p in 0..self.ports.len() {
                let from = self.ports[p].from;
                let q: Vec<u64> = self.ports[p].comms.iter().map(|&d| self.q_tilde(from, d)).collect();
                let port = &mut self.ports[p];
                let w = wfq_weights(&q, &port.memory, &port.sent, self.config.alpha);
                port.drr.set_weights(&w);
            }
        }
        for port in self.ports.iter_mut() {
            port.sent.iter_mut().for_each(|x| *x = 0);
        }
    }

    fn drop_packet(&mut self, p: Packet) {
        self.drops += 1;
        let run = &mut self.runs[p.flow as usize];
        run.outstanding -= 1;
        run.drops += 1;
    }

    /// Queues `p` at switch `i`: sink, hashed port, or drop.
    fn enqueue(&mut self, i: usize, p: Packet) {
        let k = i * self.nd() + p.commodity;
        if let Some(sink) = self.sinks[k].as_mut() {
            if (sink.queue.len() as u64) < self.qcap {
                sink.queue.push_back(p);
                return;
            }
            return self.drop_packet(p);
        }
        let route = &self.routes[k];
        if route.ports.is_empty() {
            return self.drop_packet(p);
        }
        let hash = switch_hash(self.records[p.flow as usize].hash_field, self.switches[i]);
        let port = &mut self.ports[route.ports[hash_index(hash, &route.fractions)]];
        let slot = port.slot[p.commodity];
        if self.heuristic {
            if port.backlog[slot] < self.qcap {
                port.queues[slot].push_back(p);
                port.backlog[slot] += 1;
                return;
            }
        } else if (port.fifo.len() as u64) < self.fifo_cap {
            port.fifo.push_back(p);
            port.backlog[slot] += 1;
            return;
        }
        self.drop_packet(p)
    }

    fn inject(&mut self, t: u64, nic_rate: u64) {
        for n in 0..self.active.len() {
            let f = self.active[n] as usize;
            let run = &mut self.runs[f];
            if !run.in_epoch && run.next_epoch <= t {
                let r = &self.records[f];
                run.quota = run.window.min(r.size - r.delivered);
                run.drops = 0;
                run.in_epoch = true;
            }
            let k = run.quota.min(nic_rate);
            if k == 0 {
                continue;
            }
            run.quota -= k;
            run.outstanding += k;
            let r = &self.records[f];
            let i = self.switches.binary_search(&r.source).expect("known switch");
            let d = self.commodities.binary_search(&r.commodity).expect("known commodity");
            let path = fold(FNV_OFFSET, r.source.0 as u64);
            for _ in 0..k {
                self.enqueue(
                    i,
                    Packet {
                        flow: f as u32,
                        commodity: d,
                        path,
                        info: None,
                    },
                );
            }
        }
    }

    fn serve_ports(&mut self, t: u64) -> Vec<(usize, usize, Packet)> {
        let mut transit = Vec::new();
        for p in 0..self.ports.len() {
            let budget = self.ports[p].capacity_at(t);
            if budget == 0 {
                continue;
            }
            let reverse_comms = self.ports[p]
                .reverse
                .map(|q| self.ports[q].comms.clone())
                .unwrap_or_default();
            let (from, to) = (self.ports[p].from, self.ports[p].to);
            let mut out = Vec::new();
            let port = &mut self.ports[p];
            if self.heuristic {
                self.served.resize(port.comms.len(), 0);
                port.drr.serve(&port.backlog, budget, &mut self.served);
                for (slot, &k) in self.served.iter().enumerate() {
                    for _ in 0..k {
                        out.push(port.queues[slot].pop_front().expect("backlog counted"));
                    }
                }
            } else {
                for _ in 0..budget {
                    match port.fifo.pop_front() {
                        Some(pkt) => out.push(pkt),
                        None => break,
                    }
                }
            }
            let nd = self.commodities.len();
            for mut pkt in out {
                let port = &mut self.ports[p];
                let slot = port.slot[pkt.commodity];
                port.backlog[slot] -= 1;
                port.sent[slot] += 1;
                pkt.info = port
                    .cursor
                    .select_index(&reverse_comms)
                    .map(|d| (d, self.info[to * nd + d]));
                let rec = &mut self.records[pkt.flow as usize];
                let (a, b) = (self.switches[from], self.switches[to]);
                match rec.hops.iter_mut().find(|h| h.switch == a && h.next == b) {
                    Some(h) => h.packets += 1,
                    None => rec.hops.push(HopCount {
                        switch: a,
                        next: b,
                        packets: 1,
                    }),
                }
                transit.push((to, from, pkt));
            }
        }
        transit
    }

    fn serve_sinks(&mut self, t: u64) {
        for k in 0..self.sinks.len() {
            let Some(sink) = self.sinks[k].as_mut() else { continue };
            let n = (sink.queue.len() as u64).min(sink.rate);
            let done: Vec<Packet> = sink.queue.drain(..n as usize).collect();
            for p in done {
                let f = p.flow as usize;
                self.runs[f].outstanding -= 1;
                let r = &mut self.records[f];
                r.delivered += 1;
                if !r.paths.contains(&p.path) {
                    r.paths.push(p.path);
                }
                if r.delivered == r.size {
                    r.completion = Some(t);
                }
            }
        }
    }

    fn arrive(&mut self, to: usize, from: usize, mut p: Packet) {
        if let Some((d, v)) = p.info.take() {
            if let Some(q) = self.port_to(to, from) {
                let port = &mut self.ports[q];
                if port.slot[d] != NO_SLOT {
                    port.memory[port.slot[d]] = v;
                }
            }
        }
        p.path = fold(p.path, self.switches[to].0 as u64);
        self.enqueue(to, p);
    }

    fn settle_epochs(&mut self, t: u64, ack_delay: u64) {
        let mut n = 0;
        while n < self.active.len() {
            let f = self.active[n] as usize;
            let run = &mut self.runs[f];
            if run.in_epoch && run.quota == 0 && run.outstanding == 0 {
                run.in_epoch = false;
                let rec = &mut self.records[f];
                rec.retransmits += run.drops;
                if run.drops > 0 {
                    run.window = (run.window / 2).max(1);
                } else {
                    run.window += 1;
                }
                run.next_epoch = t + 1 + ack_delay;
                if rec.delivered == rec.size {
                    rec.state = FlowState::Done;
                    self.active.swap_remove(n);
                    continue;
                }
            }
            n += 1;
        }
        // keep service order independent of completion order
        self.active.sort_unstable();
    }

    fn update_info(&mut self) {
        let nd = self.nd();
        for k in 0..self.ema.len() {
            let q = self.q_tilde(k / nd, k % nd);
            self.info[k] = self.ema[k].update(q);
        }
    }
}

impl PiggybackCursor {
    /// Index form of [`PiggybackCursor::select`].
    fn select_index(&mut self, comms: &[usize]) -> Option<usize> {
        let ids: Vec<CommodityId> = comms.iter().map(|&d| CommodityId(d as u32)).collect();
        self.select(&ids).map(|c| c.0 as usize)
    }
}
