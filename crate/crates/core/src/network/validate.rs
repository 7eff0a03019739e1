use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{CommodityId, SwitchId, Topology};

/// One broken topology rule, naming the offending element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    ZeroBound,
    UnknownSwitch { context: String, switch: SwitchId },
    UnknownCommodity { context: String, commodity: CommodityId },
    SelfLoop { switch: SwitchId },
    LinkOverBound { from: SwitchId, to: SwitchId, capacity: u64, bound: u64 },
    SinkOverBound { switch: SwitchId, commodity: CommodityId, capacity: u64, bound: u64 },
    NextHopWithoutLink { switch: SwitchId, commodity: CommodityId, next: SwitchId },
    Cycle { commodity: CommodityId, path: Vec<SwitchId> },
    DeadEnd { commodity: CommodityId, switch: SwitchId },
}

impl Violation {
    pub fn rule(&self) -> &'static str {
        match self {
            Violation::ZeroBound => "bound-positive",
            Violation::UnknownSwitch { .. } => "known-switch",
            Violation::UnknownCommodity { .. } => "known-commodity",
            Violation::SelfLoop { .. } => "no-self-loop",
            Violation::LinkOverBound { .. } => "link-capacity-bound",
            Violation::SinkOverBound { .. } => "sink-capacity-bound",
            Violation::NextHopWithoutLink { .. } => "next-hop-has-link",
            Violation::Cycle { .. } => "acyclic-next-hops",
            Violation::DeadEnd { .. } => "reaches-sink",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] ", self.rule())?;
        match self {
            Violation::ZeroBound => write!(f, "bound must be positive"),
            Violation::UnknownSwitch { context, switch } => {
                write!(f, "{context} references unknown switch {switch}")
            }
            Violation::UnknownCommodity { context, commodity } => {
                write!(f, "{context} references unknown commodity {commodity}")
            }
            Violation::SelfLoop { switch } => write!(f, "link {switch}->{switch} must have zero capacity"),
            Violation::LinkOverBound { from, to, capacity, bound } => {
                write!(f, "link {from}->{to} capacity {capacity} exceeds bound {bound}")
            }
            Violation::SinkOverBound { switch, commodity, capacity, bound } => {
                write!(f, "sink {switch}/{commodity} capacity {capacity} exceeds bound {bound}")
            }
            Violation::NextHopWithoutLink { switch, commodity, next } => {
                write!(f, "next hop {next} of {switch} for {commodity} has no link")
            }
            Violation::Cycle { commodity, path } => {
                let names: Vec<String> = path.iter().map(|s| s.to_string()).collect();
                write!(f, "next-hop graph of {commodity} has cycle {}", names.join("->"))
            }
            Violation::DeadEnd { commodity, switch } => write!(
                f,
                "{switch} receives {commodity} but has neither next hops nor sink capacity"
            ),
        }
    }
}

/// Lints a topology. The result is empty iff every rule holds.
pub fn validate_topology(topology: &Topology) -> Vec<Violation> {
    let mut out = Vec::new();
    let bound = topology.bound;
    if bound == 0 {
        out.push(Violation::ZeroBound);
    }
    let known = |s: &SwitchId| topology.switches.contains(s);
    let known_d = |d: &CommodityId| topology.destinations.contains(d);

    for (&(i, j), &c) in &topology.link_capacity {
        for s in [i, j] {
            if !known(&s) {
                out.push(Violation::UnknownSwitch {
                    context: format!("link {i}->{j}"),
                    switch: s,
                });
            }
        }
        if i == j && c > 0 {
            out.push(Violation::SelfLoop { switch: i });
        }
        if bound > 0 && c > bound {
            out.push(Violation::LinkOverBound { from: i, to: j, capacity: c, bound });
        }
    }
    for (&(i, d), &b) in &topology.dest_capacity {
        if !known(&i) {
            out.push(Violation::UnknownSwitch {
                context: format!("sink {i}/{d}"),
                switch: i,
            });
        }
        if !known_d(&d) {
            out.push(Violation::UnknownCommodity {
                context: format!("sink {i}/{d}"),
                commodity: d,
            });
        }
        if bound > 0 && b > bound {
            out.push(Violation::SinkOverBound { switch: i, commodity: d, capacity: b, bound });
        }
    }
    for (&(i, d), hops) in &topology.next_hops {
        if !known(&i) {
            out.push(Violation::UnknownSwitch {
                context: format!("next hops of {i}/{d}"),
                switch: i,
            });
        }
        if !known_d(&d) {
            out.push(Violation::UnknownCommodity {
                context: format!("next hops of {i}/{d}"),
                commodity: d,
            });
        }
        for &j in hops {
            if !known(&j) {
                out.push(Violation::UnknownSwitch {
                    context: format!("next hops of {i}/{d}"),
                    switch: j,
                });
            } else if topology.capacity(i, j) == 0 {
                out.push(Violation::NextHopWithoutLink { switch: i, commodity: d, next: j });
            }
        }
    }

    for &d in &topology.destinations {
        let graph: BTreeMap<SwitchId, &std::collections::BTreeSet<SwitchId>> = topology
            .next_hops
            .iter()
            .filter(|((_, c), _)| *c == d)
            .map(|(&(i, _), hops)| (i, hops))
            .collect();
        if let Some(path) = find_cycle(&graph) {
            out.push(Violation::Cycle { commodity: d, path });
            continue;
        }
        // Every switch fed by a commodity-d hop must forward or deliver it.
        let fed: BTreeSet<SwitchId> = graph.values().flat_map(|h| h.iter().copied()).collect();
        for j in fed {
            if !topology.is_live_queue(j, d) {
                out.push(Violation::DeadEnd { commodity: d, switch: j });
            }
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Mark {
    Fresh,
    OnStack,
    Done,
}

/// Iterative DFS; returns the first directed cycle found, closed (first
/// element repeated at the end).
fn find_cycle(graph: &BTreeMap<SwitchId, &BTreeSet<SwitchId>>) -> Option<Vec<SwitchId>> {
    let mut mark: BTreeMap<SwitchId, Mark> = BTreeMap::new();
    for &root in graph.keys() {
        if mark.get(&root).copied().unwrap_or(Mark::Fresh) != Mark::Fresh {
            continue;
        }
        let mut stack: Vec<(SwitchId, Vec<SwitchId>)> = Vec::new();
        let succ = |s: SwitchId| -> Vec<SwitchId> {
            graph.get(&s).map(|h| h.iter().copied().collect()).unwrap_or_default()
        };
        mark.insert(root, Mark::OnStack);
        stack.push((root, succ(root)));
        while let Some((node, pending)) = stack.last_mut() {
            let node = *node;
            match pending.pop() {
                Some(next) => match mark.get(&next).copied().unwrap_or(Mark::Fresh) {
                    Mark::Fresh => {
                        mark.insert(next, Mark::OnStack);
                        stack.push((next, succ(next)));
                    }
                    Mark::OnStack => {
                        let start = stack.iter().position(|(s, _)| *s == next).unwrap();
                        let mut path: Vec<SwitchId> = stack[start..].iter().map(|(s, _)| *s).collect();
                        path.push(next);
                        return Some(path);
                    }
                    Mark::Done => {}
                },
                None => {
                    mark.insert(node, Mark::Done);
                    stack.pop();
                }
            }
        }
    }
    None
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

    /// Fragment around switch 9 for commodity 8.
    fn fragment() -> Topology {
        let mut t = Topology {
            bound: 20,
            ..Default::default()
        };
        for i in [1, 2, 8, 9, 10, 11, 12, 13, 14] {
            t.switches.insert(s(i));
        }
        t.destinations.insert(d(8));
        let hops: &[(u32, &[u32])] = &[
            (1, &[9, 10]),
            (2, &[9, 10]),
            (9, &[13, 14]),
            (10, &[13, 14]),
            (13, &[11, 12]),
            (14, &[11, 12]),
            (11, &[8]),
            (12, &[8]),
        ];
        for (i, js) in hops {
            let set: BTreeSet<SwitchId> = js.iter().map(|&j| s(j)).collect();
            for &j in js.iter() {
                t.link_capacity.insert((s(*i), s(j)), 8);
                t.link_capacity.insert((s(j), s(*i)), 8);
            }
            t.next_hops.insert((s(*i), d(8)), set);
        }
        t.dest_capacity.insert((s(8), d(8)), 20);
        t
    }

    #[test]
    fn legal_fragment_is_clean() {
        assert_eq!(validate_topology(&fragment()), vec![]);
    }

    #[test]
    fn mutual_next_hops_form_a_cycle() {
        let mut t = fragment();
        t.link_capacity.insert((s(9), s(10)), 8);
        t.link_capacity.insert((s(10), s(9)), 8);
        t.next_hops.get_mut(&(s(9), d(8))).unwrap().insert(s(10));
        t.next_hops.get_mut(&(s(10), d(8))).unwrap().insert(s(9));
        let v = validate_topology(&t);
        assert!(
            v.iter().any(|x| matches!(x, Violation::Cycle { commodity, .. } if *commodity == d(8))),
            "{v:?}"
        );
    }

    #[test]
    fn capacity_above_bound() {
        let mut t = fragment();
        t.link_capacity.insert((s(9), s(13)), 21);
        let v = validate_topology(&t);
        assert_eq!(
            v,
            vec![Violation::LinkOverBound { from: s(9), to: s(13), capacity: 21, bound: 20 }]
        );
        assert!(v[0].to_string().contains("link-capacity-bound"));
    }

    #[test]
    fn next_hop_needs_a_link_and_a_sink() {
        let mut t = fragment();
        t.link_capacity.remove(&(s(11), s(8)));
        t.dest_capacity.clear();
        let v = validate_topology(&t);
        assert!(v.contains(&Violation::NextHopWithoutLink { switch: s(11), commodity: d(8), next: s(8) }));
        assert!(v.contains(&Violation::DeadEnd { commodity: d(8), switch: s(8) }));
    }

    #[test]
    fn self_loop_and_unknown_ids() {
        let mut t = fragment();
        t.link_capacity.insert((s(1), s(1)), 1);
        t.dest_capacity.insert((s(99), d(8)), 1);
        let v = validate_topology(&t);
        assert!(v.contains(&Violation::SelfLoop { switch: s(1) }));
        assert!(v.iter().any(|x| matches!(x, Violation::UnknownSwitch { switch, .. } if *switch == s(99))));
    }
}
