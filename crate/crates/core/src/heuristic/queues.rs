use std::collections::BTreeMap;

use crate::network::{CommodityId, SwitchId, Topology};

pub const DEFAULT_PORT_QUEUE: u64 = 200;

/// Per-port, per-commodity backlogs `Q_ij^d`. The common-queue estimate
/// `Q~_i^d` is always recomputed from these, never cached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortQueueState {
    pub capacity: u64,
    backlog: BTreeMap<(SwitchId, SwitchId, CommodityId), u64>,
}

impl Default for PortQueueState {
    fn default() -> Self {
        PortQueueState::new(DEFAULT_PORT_QUEUE)
    }
}

impl PortQueueState {
    pub fn new(capacity: u64) -> Self {
        PortQueueState {
            capacity,
            backlog: BTreeMap::new(),
        }
    }

    pub fn get(&self, i: SwitchId, j: SwitchId, d: CommodityId) -> u64 {
        self.backlog.get(&(i, j, d)).copied().unwrap_or(0)
    }

    /// Sets a backlog, clamped to the queue capacity. Returns what did not fit.
    pub fn set(&mut self, i: SwitchId, j: SwitchId, d: CommodityId, packets: u64) -> u64 {
        let kept = packets.min(self.capacity);
        if kept == 0 {
            self.backlog.remove(&(i, j, d));
        } else {
            self.backlog.insert((i, j, d), kept);
        }
        packets - kept
    }
}

/// `Q~_i^d`: the sum of `d`'s port queues at `i` over the next hops `H_i^d`.
pub fn approx_queue(queues: &PortQueueState, topology: &Topology, i: SwitchId, d: CommodityId) -> u64 {
    topology.next_hops(i, d).iter().map(|&j| queues.get(i, j, d)).sum()
}

/// Round-robin choice of the commodity whose queue information rides on the
/// next packet of a link.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PiggybackCursor {
    next: usize,
}

impl PiggybackCursor {
    pub fn select(&mut self, commodities: &[CommodityId]) -> Option<CommodityId> {
        if commodities.is_empty() {
            return None;
        }
        let d = commodities[self.next % commodities.len()];
        self.next = (self.next + 1) % commodities.len();
        Some(d)
    }
}

/// Exponential moving average behind the `QueueInfo` header field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueInfoEma {
    pub beta: f64,
    pub value: f64,
}

impl QueueInfoEma {
    pub fn new(beta: f64) -> Self {
        QueueInfoEma { beta, value: 0.0 }
    }

    /// Folds in one sample and returns the rounded (half-up) average.
    pub fn update(&mut self, q: u64) -> u64 {
        self.value = (1.0 - self.beta) * self.value + self.beta * q as f64;
        self.current()
    }

    pub fn current(&self) -> u64 {
        (self.value + 0.5).floor() as u64
    }
}

/// WFQ weights `max(1, Q~ - M + r/alpha)` for the commodities of one port,
/// all slices in the same commodity order.
pub fn wfq_weights(q_tilde: &[u64], memory: &[u64], r_prev: &[u64], alpha: f64) -> Vec<f64> {
    assert!(alpha > 0.0, "alpha must be positive");
    assert!(q_tilde.len() == memory.len() && memory.len() == r_prev.len());
    q_tilde
        .iter()
        .zip(memory)
        .zip(r_prev)
        .map(|((&q, &m), &r)| (q as f64 - m as f64 + r as f64 / alpha).max(1.0))
        .collect()
}

/// Capacity share of each weight.
pub fn weight_shares(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return vec![0.0; weights.len()];
    }
    weights.iter().map(|w| w / total).collect()
}
