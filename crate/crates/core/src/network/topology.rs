use std::collections::{BTreeMap, BTreeSet};

use super::{CommodityId, SwitchId};

/// Switches, commodities, directed link capacities, sink capacities and the
/// per-commodity next-hop sets. Capacities are in packets per slot.
///
/// Missing entries mean zero capacity / empty next-hop set, so `c_ii = 0`
/// and "no link" are the same thing.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Topology {
    pub switches: BTreeSet<SwitchId>,
    pub destinations: BTreeSet<CommodityId>,
    pub link_capacity: BTreeMap<(SwitchId, SwitchId), u64>,
    pub dest_capacity: BTreeMap<(SwitchId, CommodityId), u64>,
    pub next_hops: BTreeMap<(SwitchId, CommodityId), BTreeSet<SwitchId>>,
    /// Upper bound on every capacity and per-slot arrival.
    pub bound: u64,
}

static EMPTY_SWITCHES: BTreeSet<SwitchId> = BTreeSet::new();

impl Topology {
    pub fn capacity(&self, from: SwitchId, to: SwitchId) -> u64 {
        if from == to {
            return 0;
        }
        self.link_capacity.get(&(from, to)).copied().unwrap_or(0)
    }

    pub fn sink_capacity(&self, switch: SwitchId, commodity: CommodityId) -> u64 {
        self.dest_capacity
            .get(&(switch, commodity))
            .copied()
            .unwrap_or(0)
    }

    pub fn next_hops(&self, switch: SwitchId, commodity: CommodityId) -> &BTreeSet<SwitchId> {
        self.next_hops
            .get(&(switch, commodity))
            .unwrap_or(&EMPTY_SWITCHES)
    }

    /// Links with strictly positive capacity, in `(from, to)` order.
    pub fn links(&self) -> impl Iterator<Item = (SwitchId, SwitchId, u64)> + '_ {
        self.link_capacity
            .iter()
            .filter(|(&(i, j), &c)| c > 0 && i != j)
            .map(|(&(i, j), &c)| (i, j, c))
    }

    /// A queue `(i, d)` is live when it can forward or deliver commodity `d`.
    pub fn is_live_queue(&self, switch: SwitchId, commodity: CommodityId) -> bool {
        !self.next_hops(switch, commodity).is_empty() || self.sink_capacity(switch, commodity) > 0
    }

    pub fn live_queues(&self) -> Vec<(SwitchId, CommodityId)> {
        let mut out = Vec::new();
        for &i in &self.switches {
            for &d in &self.destinations {
                if self.is_live_queue(i, d) {
                    out.push((i, d));
                }
            }
        }
        out
    }

    /// Copy of the topology with the link between `a` and `b` removed in both
    /// directions, including every next-hop entry that used it.
    pub fn without_link(&self, a: SwitchId, b: SwitchId) -> Topology {
        let mut t = self.clone();
        t.link_capacity.remove(&(a, b));
        t.link_capacity.remove(&(b, a));
        for (&(i, _), hops) in t.next_hops.iter_mut() {
            if i == a {
                hops.remove(&b);
            } else if i == b {
                hops.remove(&a);
            }
        }
        t.next_hops.retain(|_, hops| !hops.is_empty());
        t
    }

    /// Largest capacity appearing anywhere in the topology.
    pub fn max_capacity(&self) -> u64 {
        let links = self.link_capacity.values().copied().max().unwrap_or(0);
        let sinks = self.dest_capacity.values().copied().max().unwrap_or(0);
        links.max(sinks)
    }
}
