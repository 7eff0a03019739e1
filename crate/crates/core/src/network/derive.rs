use std::collections::{BTreeMap, BTreeSet};

use super::{CommodityId, SwitchId, Topology};

/// Sets that follow from the next-hop configuration: previous hops `P_i^d`,
/// all next hops `H_i`, and the commodities `D_ij` carried by each link.
/// Only non-empty entries are stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DerivedSets {
    pub prev_hops: BTreeMap<(SwitchId, CommodityId), BTreeSet<SwitchId>>,
    pub all_next: BTreeMap<SwitchId, BTreeSet<SwitchId>>,
    pub link_commodities: BTreeMap<(SwitchId, SwitchId), BTreeSet<CommodityId>>,
}

static NO_SWITCHES: BTreeSet<SwitchId> = BTreeSet::new();
static NO_COMMODITIES: BTreeSet<CommodityId> = BTreeSet::new();

impl DerivedSets {
    pub fn prev_hops(&self, switch: SwitchId, commodity: CommodityId) -> &BTreeSet<SwitchId> {
        self.prev_hops
            .get(&(switch, commodity))
            .unwrap_or(&NO_SWITCHES)
    }

    pub fn all_next(&self, switch: SwitchId) -> &BTreeSet<SwitchId> {
        self.all_next.get(&switch).unwrap_or(&NO_SWITCHES)
    }

    pub fn link_commodities(&self, from: SwitchId, to: SwitchId) -> &BTreeSet<CommodityId> {
        self.link_commodities
            .get(&(from, to))
            .unwrap_or(&NO_COMMODITIES)
    }

    pub fn is_empty(&self) -> bool {
        self.prev_hops.is_empty() && self.all_next.is_empty() && self.link_commodities.is_empty()
    }
}

pub fn derive_sets(topology: &Topology) -> DerivedSets {
    let mut sets = DerivedSets::default();
    for (&(i, d), hops) in &topology.next_hops {
        for &j in hops {
            sets.prev_hops.entry((j, d)).or_default().insert(i);
            sets.all_next.entry(i).or_default().insert(j);
            sets.link_commodities.entry((i, j)).or_default().insert(d);
        }
    }
    sets
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: u32) -> SwitchId {
        SwitchId(v)
    }

    fn d(v: u32) -> CommodityId {
        CommodityId(v)
    }

    fn line() -> Topology {
        let mut t = Topology {
            bound: 10,
            ..Default::default()
        };
        for i in 1..=4 {
            t.switches.insert(s(i));
        }
        for c in 1..=2 {
            t.destinations.insert(d(c));
            for i in 1..=3 {
                t.next_hops.insert((s(i), d(c)), [s(i + 1)].into());
            }
        }
        for i in 1..=3 {
            t.link_capacity.insert((s(i), s(i + 1)), 3);
        }
        t
    }

    #[test]
    fn line_network_sets() {
        let sets = derive_sets(&line());
        for c in 1..=2 {
            assert_eq!(sets.prev_hops(s(4), d(c)), &[s(3)].into());
            assert!(sets.prev_hops(s(1), d(c)).is_empty());
        }
        assert_eq!(sets.link_commodities(s(1), s(2)), &[d(1), d(2)].into());
        assert_eq!(sets.all_next(s(2)), &[s(3)].into());
        assert!(sets.all_next(s(4)).is_empty());
    }

    #[test]
    fn single_switch_has_no_sets() {
        let t = Topology {
            switches: [s(1)].into(),
            destinations: [d(1)].into(),
            bound: 1,
            ..Default::default()
        };
        assert!(derive_sets(&t).is_empty());
    }

    #[test]
    fn fan_out_from_switch_nine() {
        let mut t = Topology::default();
        t.next_hops.insert((s(9), d(8)), [s(13), s(14)].into());
        t.next_hops.insert((s(1), d(8)), [s(9), s(10)].into());
        let sets = derive_sets(&t);
        assert!(sets.prev_hops(s(13), d(8)).contains(&s(9)));
        assert!(sets.prev_hops(s(14), d(8)).contains(&s(9)));
        assert_eq!(sets.prev_hops(s(9), d(8)), &[s(1)].into());
        assert_eq!(sets.all_next(s(9)), &[s(13), s(14)].into());
    }
}
