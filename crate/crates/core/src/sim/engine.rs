use super::dataplane::{schedule_targets_into, settle_tokens};
use super::metrics::{build_report, convergence_block, convergence_slot, InvariantReport, MetricsReport, Totals, WindowSums};
use super::trace::{KRecord, SlotRecord, SlotTrace, TraceLevel};
use crate::alloc::{
    allocate_rates, k_from_f64, k_to_f64, maxweight_allocate, x_max, Demand, KFactor, LinkAllocState,
};
use crate::error::SimError;
use crate::network::{derive_sets, Algorithm, ArrivalSampler, CommodityId, ScenarioConfig, SwitchId};

/// Which slots the per-queue averages cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowChoice {
    /// Drop the configured warm-up fraction of the horizon.
    #[default]
    Warmup,
    /// Start at the detected convergence slot, falling back to the warm-up
    /// window when the run never settles.
    Converged,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub trace: TraceLevel,
    pub window: WindowChoice,
}

#[derive(Debug, Clone)]
struct LinkState {
    from: usize,
    to: usize,
    from_id: SwitchId,
    to_id: SwitchId,
    capacity: u64,
    /// Commodity indices carried, ascending id.
    comm: Vec<usize>,
    tokens: Vec<u64>,
    alloc: Vec<u64>,
    prev: Vec<u64>,
    sent: Vec<u64>,
    targets: Vec<u64>,
    served: Vec<u64>,
    k: Option<KFactor>,
}

/// Queue matrix, token buckets and allocations at one slot boundary.
#[derive(Debug, Clone)]
pub struct SimState {
    pub clock: u64,
    switches: Vec<SwitchId>,
    commodities: Vec<CommodityId>,
    queues: Vec<u64>,
    links: Vec<LinkState>,
}

impl SimState {
    fn sw(&self, i: SwitchId) -> Option<usize> {
        self.switches.binary_search(&i).ok()
    }

    fn cm(&self, d: CommodityId) -> Option<usize> {
        self.commodities.binary_search(&d).ok()
    }

    fn qi(&self, i: usize, d: usize) -> usize {
        i * self.commodities.len() + d
    }

    fn link_slot(&self, i: SwitchId, j: SwitchId, d: CommodityId) -> Option<(&LinkState, usize)> {
        let d = self.cm(d)?;
        let l = self.links.iter().find(|l| l.from_id == i && l.to_id == j)?;
        let n = l.comm.iter().position(|&e| e == d)?;
        Some((l, n))
    }

    /// `Q_i^d`; zero for unknown ids.
    pub fn queue(&self, i: impl Into<SwitchId>, d: impl Into<CommodityId>) -> u64 {
        match (self.sw(i.into()), self.cm(d.into())) {
            (Some(i), Some(d)) => self.queues[self.qi(i, d)],
            _ => 0,
        }
    }

    pub fn tokens(&self, i: impl Into<SwitchId>, j: impl Into<SwitchId>, d: impl Into<CommodityId>) -> u64 {
        self.link_slot(i.into(), j.into(), d.into())
            .map_or(0, |(l, n)| l.tokens[n])
    }

    pub fn interval_alloc(&self, i: impl Into<SwitchId>, j: impl Into<SwitchId>, d: impl Into<CommodityId>) -> u64 {
        self.link_slot(i.into(), j.into(), d.into())
            .map_or(0, |(l, n)| l.alloc[n])
    }

    pub fn prev_alloc(&self, i: impl Into<SwitchId>, j: impl Into<SwitchId>, d: impl Into<CommodityId>) -> u64 {
        self.link_slot(i.into(), j.into(), d.into())
            .map_or(0, |(l, n)| l.prev[n])
    }

    /// Fairness scalar chosen at the last reconfiguration of `(i, j)`.
    pub fn k(&self, i: impl Into<SwitchId>, j: impl Into<SwitchId>) -> Option<KFactor> {
        let (i, j) = (i.into(), j.into());
        self.links
            .iter()
            .find(|l| l.from_id == i && l.to_id == j)
            .and_then(|l| l.k)
    }

    pub fn total_backlog(&self) -> u64 {
        self.queues.iter().sum()
    }
}

/// A single deterministic run in progress.
pub struct Simulator {
    config: ScenarioConfig,
    options: RunOptions,
    state: SimState,
    k_max: KFactor,
    /// Per switch, outgoing link indices in ascending next-hop id.
    out_links: Vec<Vec<usize>>,
    sink: Vec<u64>,
    live: Vec<usize>,
    sampler: ArrivalSampler,
    source_q: Vec<usize>,
    arrivals: Vec<u64>,
    scratch: Vec<(u64, usize)>,
    prev_queues: Vec<u64>,
    interval_start: Vec<u64>,
    interval_arrivals: Vec<u64>,
    cum_arrivals: Vec<u64>,
    cum_departures: Vec<u64>,
    slot_arrivals: Vec<u64>,
    slot_departures: Vec<u64>,
    growth_limit: u64,
    inv: InvariantReport,
    trace: SlotTrace,
    warmup_start: u64,
    warmup_sums: Vec<u128>,
    block: u64,
    block_sums: Vec<Vec<u128>>,
}

impl Simulator {
    pub fn new(config: &ScenarioConfig, options: RunOptions) -> Result<Self, SimError> {
        if config.algorithm.is_flow_level() {
            return Err(SimError::Unsupported(format!(
                "algorithm `{}` runs on the flow-level simulator",
                config.algorithm
            )));
        }
        let k_max = k_from_f64(config.k_max)?;
        let topo = &config.topology;
        let derived = derive_sets(topo);
        let switches: Vec<SwitchId> = topo.switches.iter().copied().collect();
        let commodities: Vec<CommodityId> = topo.destinations.iter().copied().collect();
        let nd = commodities.len();
        let sw = |i: SwitchId| switches.binary_search(&i).expect("validated switch");
        let cm = |d: CommodityId| commodities.binary_search(&d).expect("validated commodity");

        let mut links = Vec::new();
        let mut link_layout = Vec::new();
        for (i, j, c) in topo.links() {
            let carried = derived.link_commodities(i, j);
            if carried.is_empty() {
                continue;
            }
            let comm: Vec<usize> = carried.iter().map(|&d| cm(d)).collect();
            let n = comm.len();
            link_layout.push((i, j, carried.iter().copied().collect()));
            links.push(LinkState {
                from: sw(i),
                to: sw(j),
                from_id: i,
                to_id: j,
                capacity: c,
                comm,
                tokens: vec![0; n],
                alloc: vec![0; n],
                prev: vec![0; n],
                sent: vec![0; n],
                targets: vec![0; n],
                served: vec![0; n],
                k: None,
            });
        }
        let mut out_links = vec![Vec::new(); switches.len()];
        for (n, l) in links.iter().enumerate() {
            out_links[l.from].push(n);
        }
        for v in &mut out_links {
            v.sort_by_key(|&n| links[n].to_id);
        }

        let mut sink = vec![0; switches.len() * nd];
        for (&(i, d), &b) in &topo.dest_capacity {
            sink[sw(i) * nd + cm(d)] = b;
        }
        let live_ids = topo.live_queues();
        let live: Vec<usize> = live_ids.iter().map(|&(i, d)| sw(i) * nd + cm(d)).collect();

        let sampler = ArrivalSampler::new(&config.arrivals, config.seed);
        let source_q: Vec<usize> = sampler.keys().iter().map(|&(i, d)| sw(i) * nd + cm(d)).collect();

        let nq = switches.len() * nd;
        let warmup_start = (config.warmup_fraction * config.horizon as f64).floor() as u64;
        let block = convergence_block(config.horizon, config.interval);
        let nblocks = config.horizon.div_ceil(block) as usize;
        let trace = SlotTrace {
            level: options.trace,
            horizon: config.horizon,
            interval: config.interval,
            commodities: commodities.clone(),
            queues: live_ids,
            link_layout,
            total_backlog: Vec::with_capacity(config.horizon as usize),
            ..Default::default()
        };
        Ok(Simulator {
            growth_limit: topo.bound * (switches.len() as u64 + 1),
            state: SimState {
                clock: 0,
                switches,
                commodities,
                queues: vec![0; nq],
                links,
            },
            config: config.clone(),
            options,
            k_max,
            out_links,
            sink,
            warmup_sums: vec![0; live.len()],
            block_sums: vec![vec![0; live.len()]; nblocks],
            live,
            arrivals: vec![0; source_q.len()],
            sampler,
            source_q,
            scratch: Vec::new(),
            prev_queues: vec![0; nq],
            interval_start: vec![0; nq],
            interval_arrivals: vec![0; nq],
            cum_arrivals: vec![0; nd],
            cum_departures: vec![0; nd],
            slot_arrivals: vec![0; nd],
            slot_departures: vec![0; nd],
            inv: InvariantReport::default(),
            trace,
            warmup_start,
            block,
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn invariants(&self) -> InvariantReport {
        self.inv
    }

    /// Overwrites one backlog, as if the packets had arrived exogenously.
    pub fn set_queue(&mut self, i: impl Into<SwitchId>, d: impl Into<CommodityId>, value: u64) {
        let (i, d) = (i.into(), d.into());
        let (Some(si), Some(di)) = (self.state.sw(i), self.state.cm(d)) else {
            return;
        };
        let q = self.state.qi(si, di);
        let old = self.state.queues[q];
        self.state.queues[q] = value;
        self.cum_arrivals[di] = self.cum_arrivals[di] + value - old.min(value);
        self.cum_departures[di] += old - old.min(value);
        self.interval_start[q] = value;
    }

    fn check_interval(&mut self) {
        let t_len = self.config.interval;
        let st = &self.state;
        let nq = st.queues.len();
        let mut out = vec![0u64; nq];
        let mut inn = vec![0u64; nq];
        for l in &st.links {
            for (n, &d) in l.comm.iter().enumerate() {
                out[st.qi(l.from, d)] += l.alloc[n];
                inn[st.qi(l.to, d)] += l.alloc[n];
                if l.sent[n] > l.alloc[n] {
                    self.inv.token_bucket += 1;
                }
            }
        }
        for q in 0..nq {
            let drained = self.interval_start[q].saturating_sub(out[q] + t_len * self.sink[q]);
            if st.queues[q] > drained + inn[q] + self.interval_arrivals[q] {
                self.inv.interval_bound += 1;
            }
        }
        self.inv.intervals_checked += 1;
    }

    /// Runs the allocator on every link from the current queue snapshot and
    /// refills the token buckets.
    pub fn reconfigure(&mut self) -> Result<(), SimError> {
        assert_eq!(
            self.state.clock % self.config.interval,
            0,
            "reconfiguration only happens at interval boundaries"
        );
        if self.state.clock > 0 {
            self.check_interval();
        }
        let t_len = self.config.interval;
        let clock = self.state.clock;
        let st = &mut self.state;
        let nd = st.commodities.len();
        for l in &mut st.links {
            l.prev.copy_from_slice(&l.alloc);
            let demands = l
                .comm
                .iter()
                .zip(&l.prev)
                .map(|(&d, &z)| {
                    Demand::new(st.commodities[d], st.queues[l.from * nd + d], st.queues[l.to * nd + d], z)
                })
                .collect();
            let budget = t_len * l.capacity;
            let link = LinkAllocState::new(demands, budget, self.k_max)?;
            let a = match self.config.algorithm {
                Algorithm::Algorithm1 => allocate_rates(&link),
                _ => maxweight_allocate(&link),
            };
            if a.total() > budget {
                self.inv.cap += 1;
            }
            if let Some(k) = a.k_used {
                if k < KFactor::from_integer(1) || k > self.k_max {
                    self.inv.k_range += 1;
                }
                for (d, &(_, r)) in link.demands().iter().zip(&a.rates) {
                    if r > x_max(d.q_local, d.q_next, d.prev_alloc, k) {
                        self.inv.cap += 1;
                    }
                }
            }
            for (n, &(_, r)) in a.rates.iter().enumerate() {
                l.alloc[n] = r;
                l.tokens[n] = r;
                l.sent[n] = 0;
            }
            l.k = a.k_used;
            self.trace.k_records.push(KRecord {
                slot: clock,
                from: l.from_id,
                to: l.to_id,
                k: a.k_used.map(k_to_f64),
                saturated: a.k_used == Some(self.k_max),
            });
        }
        self.interval_start.copy_from_slice(&st.queues);
        self.interval_arrivals.iter_mut().for_each(|a| *a = 0);
        Ok(())
    }

    fn record_start(&mut self) {
        let t = self.state.clock;
        let q = &self.state.queues;
        self.trace.total_backlog.push(q.iter().sum());
        let block = &mut self.block_sums[(t / self.block) as usize];
        let in_warmup_window = t >= self.warmup_start;
        for (n, &qi) in self.live.iter().enumerate() {
            let v = q[qi] as u128;
            block[n] += v;
            if in_warmup_window {
                self.warmup_sums[n] += v;
            }
        }
    }

    fn keep_record(&self) -> bool {
        self.options
            .trace
            .stride()
            .is_some_and(|s| self.state.clock.is_multiple_of(s))
    }

    /// Advances one slot: serve, deliver, depart, arrive, spend tokens.
    pub fn step_slot(&mut self) {
        let t_len = self.config.interval;
        let remaining = t_len - self.state.clock % t_len;
        self.record_start();
        let keep = self.keep_record();
        let mut record = keep.then(|| SlotRecord {
            slot: self.state.clock,
            queues: self.live.iter().map(|&q| self.state.queues[q]).collect(),
            arrivals: Vec::new(),
            departures: Vec::new(),
            transmissions: Vec::new(),
            cum_arrivals: self.cum_arrivals.clone(),
            cum_departures: self.cum_departures.clone(),
        });

        let st = &mut self.state;
        let nd = st.commodities.len();
        self.prev_queues.copy_from_slice(&st.queues);

        for l in &mut st.links {
            schedule_targets_into(&l.tokens, l.capacity, remaining, &mut l.targets, &mut self.scratch);
        }
        // Serve: links of one switch take backlog in ascending next-hop order.
        for outs in &self.out_links {
            for &n in outs {
                let l = &mut st.links[n];
                for (m, &d) in l.comm.iter().enumerate() {
                    let q = &mut st.queues[l.from * nd + d];
                    let s = l.targets[m].min(*q);
                    *q -= s;
                    l.served[m] = s;
                }
            }
        }
        for l in &st.links {
            let mut total = 0;
            for (m, &d) in l.comm.iter().enumerate() {
                st.queues[l.to * nd + d] += l.served[m];
                total += l.served[m];
                if l.served[m] > l.tokens[m] {
                    self.inv.token_bucket += 1;
                }
            }
            if total > l.capacity {
                self.inv.capacity += 1;
            }
        }
        self.slot_departures.iter_mut().for_each(|x| *x = 0);
        for (q, &b) in self.sink.iter().enumerate() {
            if b > 0 {
                let dep = st.queues[q].min(b);
                st.queues[q] -= dep;
                self.slot_departures[q % nd] += dep;
            }
        }
        self.sampler.sample_into(&mut self.arrivals);
        self.slot_arrivals.iter_mut().for_each(|x| *x = 0);
        for (&q, &a) in self.source_q.iter().zip(&self.arrivals) {
            st.queues[q] += a;
            self.interval_arrivals[q] += a;
            self.slot_arrivals[q % nd] += a;
            if a > self.config.topology.bound {
                self.inv.arrival_bound += 1;
            }
        }
        for l in &mut st.links {
            settle_tokens(&mut l.tokens, &l.targets, &l.served, l.capacity, remaining);
            for (s, x) in l.sent.iter_mut().zip(&l.served) {
                *s += x;
            }
        }

        for (now, before) in st.queues.iter().zip(&self.prev_queues) {
            if now.saturating_sub(*before) > self.growth_limit {
                self.inv.growth += 1;
            }
        }
        let mut held = vec![0u64; nd];
        for (q, &v) in st.queues.iter().enumerate() {
            held[q % nd] += v;
        }
        for d in 0..nd {
            self.cum_arrivals[d] += self.slot_arrivals[d];
            self.cum_departures[d] += self.slot_departures[d];
            if self.cum_arrivals[d] != self.cum_departures[d] + held[d] {
                self.inv.conservation += 1;
            }
        }
        self.inv.slots_checked += 1;

        if let Some(r) = record.as_mut() {
            r.arrivals = self.slot_arrivals.clone();
            r.departures = self.slot_departures.clone();
            r.transmissions = st.links.iter().flat_map(|l| l.served.iter().copied()).collect();
        }
        if let Some(r) = record {
            self.trace.records.push(r);
        }
        st.clock += 1;
    }

    /// Runs the remaining slots and produces the report and trace.
    pub fn finish(mut self) -> Result<(MetricsReport, SlotTrace), SimError> {
        while self.state.clock < self.config.horizon {
            if self.state.clock.is_multiple_of(self.config.interval) {
                self.reconfigure()?;
            }
            self.step_slot();
        }
        if self.config.horizon > 0 {
            self.check_interval();
        }
        let horizon = self.config.horizon;
        let (window, sums, samples) = match self.options.window {
            WindowChoice::Converged => match convergence_slot(&self.trace.total_backlog, self.block) {
                Some(start) => {
                    let mut sums = vec![0u128; self.live.len()];
                    for b in &self.block_sums[(start / self.block) as usize..] {
                        for (s, v) in sums.iter_mut().zip(b) {
                            *s += v;
                        }
                    }
                    ([start, horizon], sums, horizon - start)
                }
                None => self.warmup_window(),
            },
            WindowChoice::Warmup => self.warmup_window(),
        };
        let arrived: u64 = self.cum_arrivals.iter().sum();
        let departed: u64 = self.cum_departures.iter().sum();
        let mut report = build_report(
            &self.config,
            window,
            WindowSums {
                queues: &self.trace.queues,
                sums: &sums,
                samples,
            },
            &self.trace,
            Totals {
                arrived,
                departed,
                backlog: self.state.total_backlog(),
            },
        );
        report.invariants = self.inv;
        Ok((report, self.trace))
    }

    fn warmup_window(&self) -> ([u64; 2], Vec<u128>, u64) {
        let h = self.config.horizon;
        (
            [self.warmup_start.min(h), h],
            self.warmup_sums.clone(),
            h - self.warmup_start.min(h),
        )
    }
}

/// Runs a scenario with no per-slot trace and the warm-up window.
pub fn run(config: &ScenarioConfig) -> Result<(MetricsReport, SlotTrace), SimError> {
    run_with(config, RunOptions::default())
}

pub fn run_with(config: &ScenarioConfig, options: RunOptions) -> Result<(MetricsReport, SlotTrace), SimError> {
    Simulator::new(config, options)?.finish()
}
