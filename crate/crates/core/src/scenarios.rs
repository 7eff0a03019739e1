//! Builders for the shipped experiment scenarios.
//!
//! Each builder returns a [`ScenarioDoc`]; the JSON files under `configs/`
//! are these documents pretty-printed, and a test keeps the two in sync.

use crate::network::config::{
    ArrivalsDoc, LinkDoc, NextHopDoc, RunDoc, SinkDoc, SourceDoc, TopologyDoc, SCHEMA_VERSION,
};
use crate::network::{
    Algorithm, ArrivalLaw, CommodityId, FlowGroup, FlowWorkload, LinkFailure, PriorityReservation,
    ScenarioConfig, ScenarioDoc, ScenarioEvents, SwitchId,
};

fn s(n: u32) -> SwitchId {
    SwitchId(n)
}

fn c(n: u32) -> CommodityId {
    CommodityId(n)
}

fn link(from: u32, to: u32, capacity: u64) -> LinkDoc {
    LinkDoc {
        from: s(from),
        to: s(to),
        capacity,
        bidirectional: false,
    }
}

fn duplex(a: u32, b: u32, capacity: u64) -> LinkDoc {
    LinkDoc {
        bidirectional: true,
        ..link(a, b, capacity)
    }
}

fn sink(switch: u32, commodity: u32, capacity: u64) -> SinkDoc {
    SinkDoc {
        switch: s(switch),
        commodity: c(commodity),
        capacity,
    }
}

fn hop(switch: u32, commodity: u32, via: &[u32]) -> NextHopDoc {
    NextHopDoc {
        switch: s(switch),
        commodity: c(commodity),
        via: via.iter().map(|&v| s(v)).collect(),
    }
}

fn source(switch: u32, commodity: u32, law: ArrivalLaw) -> SourceDoc {
    SourceDoc {
        switch: s(switch),
        commodity: c(commodity),
        law,
    }
}

fn doc(name: &str, description: &str, topology: TopologyDoc, arrivals: ArrivalsDoc, run: RunDoc) -> ScenarioDoc {
    ScenarioDoc {
        version: SCHEMA_VERSION,
        name: name.to_string(),
        description: Some(description.to_string()),
        topology,
        arrivals,
        run,
        flows: None,
        events: ScenarioEvents::default(),
    }
}

/// Loads a builder's document; builders always produce valid documents.
pub fn config(doc: ScenarioDoc) -> ScenarioConfig {
    doc.into_config().expect("built-in scenario is valid")
}

/// Three shared links 1-2-3-4 of capacity 3, both commodities delivered at
/// switch 4, constant arrivals of 1 and 2 packets per slot at switch 1.
pub fn toy_line(algorithm: Algorithm, interval: u64, horizon: u64) -> ScenarioDoc {
    let topology = TopologyDoc {
        switches: (1..=4).map(s).collect(),
        commodities: vec![c(1), c(2)],
        links: vec![link(1, 2, 3), link(2, 3, 3), link(3, 4, 3)],
        sinks: vec![sink(4, 1, 3), sink(4, 2, 3)],
        next_hops: (1..=2)
            .flat_map(|d| [hop(1, d, &[2]), hop(2, d, &[3]), hop(3, d, &[4])])
            .collect(),
        bound: None,
    };
    let arrivals = ArrivalsDoc {
        scale: 1.0,
        sources: vec![
            source(1, 1, ArrivalLaw::Constant { value: 1 }),
            source(1, 2, ArrivalLaw::Constant { value: 2 }),
        ],
    };
    let name = match algorithm {
        Algorithm::Maxweight => "toy_maxweight",
        _ => "toy_sharing",
    };
    doc(
        name,
        "Two commodities over a three-link line at exactly full load",
        topology,
        arrivals,
        RunDoc {
            interval,
            horizon,
            algorithm,
            ..Default::default()
        },
    )
}

/// Line network capacities; every link runs at 90% of capacity.
pub const LINE_CAPACITY: [u64; 3] = [10, 20, 30];
pub const LINE_SINK: u64 = 40;

/// Four-switch line, both commodities delivered at switch 4, arrivals at
/// every switch (commodity 1 uniform on 4..=10, commodity 2 on 1..=3).
pub fn line_network(algorithm: Algorithm, interval: u64) -> ScenarioDoc {
    let topology = TopologyDoc {
        switches: (1..=4).map(s).collect(),
        commodities: vec![c(1), c(2)],
        links: vec![
            link(1, 2, LINE_CAPACITY[0]),
            link(2, 3, LINE_CAPACITY[1]),
            link(3, 4, LINE_CAPACITY[2]),
        ],
        sinks: vec![sink(4, 1, LINE_SINK), sink(4, 2, LINE_SINK)],
        next_hops: (1..=2)
            .flat_map(|d| [hop(1, d, &[2]), hop(2, d, &[3]), hop(3, d, &[4])])
            .collect(),
        bound: None,
    };
    let sources = (1..=4)
        .flat_map(|i| {
            [
                source(i, 1, ArrivalLaw::Uniform { lo: 4, hi: 10 }),
                source(i, 2, ArrivalLaw::Uniform { lo: 1, hi: 3 }),
            ]
        })
        .collect();
    doc(
        "line",
        "Four-switch line with arrivals at every switch",
        topology,
        ArrivalsDoc { scale: 1.0, sources },
        RunDoc {
            interval,
            horizon: 100_000,
            algorithm,
            ..Default::default()
        },
    )
}

/// Two-pod fabric: ToRs 1-8 (commodity d served at ToR d), aggregation
/// switches 9-12, cores 13 and 14.
pub mod fabric {
    pub const TORS: std::ops::RangeInclusive<u32> = 1..=8;
    pub const CORES: [u32; 2] = [13, 14];
    pub const SINK: u64 = 20;

    pub fn pod(tor: u32) -> usize {
        if tor <= 4 {
            0
        } else {
            1
        }
    }

    pub fn aggs(pod: usize) -> [u32; 2] {
        [[9, 10], [11, 12]][pod]
    }

    pub fn agg_pod(agg: u32) -> usize {
        if agg <= 10 {
            0
        } else {
            1
        }
    }
}

/// ToR-aggregation and aggregation-core capacities for the ideal fabric run.
pub const FABRIC_EDGE_CAPACITY: u64 = 10;
pub const FABRIC_CORE_CAPACITY: u64 = 10;

pub fn fabric_topology(edge: u64, core: u64, with_ninth: bool) -> TopologyDoc {
    use fabric::*;
    let mut links = Vec::new();
    for t in TORS {
        for a in aggs(pod(t)) {
            links.push(duplex(t, a, edge));
        }
    }
    for a in 9..=12 {
        for k in CORES {
            links.push(duplex(a, k, core));
        }
    }
    let mut sinks = Vec::new();
    let mut next_hops = Vec::new();
    for d in TORS {
        sinks.push(sink(d, d, SINK));
        for t in TORS.filter(|&t| t != d) {
            next_hops.push(hop(t, d, &aggs(pod(t))));
        }
        for a in 9..=12 {
            if agg_pod(a) == pod(d) {
                next_hops.push(hop(a, d, &[d]));
            } else {
                next_hops.push(hop(a, d, &CORES));
            }
        }
        for k in CORES {
            next_hops.push(hop(k, d, &aggs(pod(d))));
        }
    }
    let mut commodities: Vec<CommodityId> = TORS.map(c).collect();
    if with_ninth {
        commodities.push(c(9));
        for a in 9..=12 {
            sinks.push(sink(a, 9, SINK));
        }
        for t in TORS {
            next_hops.push(hop(t, 9, &aggs(pod(t))));
        }
    }
    TopologyDoc {
        switches: (1..=14).map(s).collect(),
        commodities,
        links,
        sinks,
        next_hops,
        bound: None,
    }
}

/// The 14-switch fabric under i.i.d. arrivals (mean 2 per ToR and remote
/// commodity, mean 1 for commodity 9), thinned by `scale`.
pub fn fabric_ideal(algorithm: Algorithm, scale: f64) -> ScenarioDoc {
    let mut sources = Vec::new();
    for i in fabric::TORS {
        for d in fabric::TORS.filter(|&d| d != i) {
            sources.push(source(i, d, ArrivalLaw::Uniform { lo: 0, hi: 4 }));
        }
        sources.push(source(i, 9, ArrivalLaw::Uniform { lo: 0, hi: 2 }));
    }
    doc(
        "fabric",
        "Two-pod fabric with nine commodities under i.i.d. arrivals",
        fabric_topology(FABRIC_EDGE_CAPACITY, FABRIC_CORE_CAPACITY, true),
        ArrivalsDoc { scale, sources },
        RunDoc {
            interval: 100,
            horizon: 100_000,
            algorithm,
            ..Default::default()
        },
    )
}

/// Flow-level capacities (packets per slot) for the fabric: edge links are a
/// quarter of core links.
pub const FLOW_EDGE_CAPACITY: u64 = 2;
pub const FLOW_CORE_CAPACITY: u64 = 8;
pub const FABRIC_FLOWS_PER_PAIR: u32 = 8;
pub const FABRIC_FLOW_SIZE: u64 = 200;
pub const FAILED_LINK: (u32, u32) = (12, 14);

/// Fabric without commodity 9 carrying flows between every ToR pair, with
/// the link between 12 and 14 down from the start.
pub fn fabric_link_failure(algorithm: Algorithm) -> ScenarioDoc {
    let mut groups = Vec::new();
    for i in fabric::TORS {
        for d in fabric::TORS.filter(|&d| d != i) {
            groups.push(FlowGroup {
                source: s(i),
                commodity: c(d),
                count: FABRIC_FLOWS_PER_PAIR,
                size: FABRIC_FLOW_SIZE,
                label: None,
            });
        }
    }
    let mut d = doc(
        "fabric_link_failure",
        "Two-pod fabric flows with the 12-14 link failed",
        fabric_topology(FLOW_EDGE_CAPACITY, FLOW_CORE_CAPACITY, false),
        ArrivalsDoc::default(),
        RunDoc {
            interval: 20,
            horizon: 20_000,
            algorithm,
            queue_capacity: Some(200),
            ..Default::default()
        },
    );
    d.flows = Some(FlowWorkload {
        groups,
        start_window: [0, 20],
        initial_window: 2,
        ack_delay: 4,
        nic_rate: 1,
    });
    d.events.link_failures.push(LinkFailure {
        slot: 0,
        a: s(FAILED_LINK.0),
        b: s(FAILED_LINK.1),
    });
    d
}

pub const PRIORITY_CAPACITY: u64 = 4;
pub const PRIORITY_RATE: u64 = 2;
pub const PRIORITY_FLOWS: u32 = 300;
pub const PRIORITY_FLOW_SIZE: u64 = 50;

/// Two ToRs (1 and 2, serving commodities 1 and 2) joined through middle
/// switches 3 and 4; priority traffic takes part of every link through 3.
pub fn priority(algorithm: Algorithm) -> ScenarioDoc {
    let topology = TopologyDoc {
        switches: (1..=4).map(s).collect(),
        commodities: vec![c(1), c(2)],
        links: vec![
            duplex(1, 3, PRIORITY_CAPACITY),
            duplex(1, 4, PRIORITY_CAPACITY),
            duplex(2, 3, PRIORITY_CAPACITY),
            duplex(2, 4, PRIORITY_CAPACITY),
        ],
        sinks: vec![sink(1, 1, PRIORITY_CAPACITY * 2), sink(2, 2, PRIORITY_CAPACITY * 2)],
        next_hops: vec![
            hop(1, 2, &[3, 4]),
            hop(3, 2, &[2]),
            hop(4, 2, &[2]),
            hop(2, 1, &[3, 4]),
            hop(3, 1, &[1]),
            hop(4, 1, &[1]),
        ],
        bound: None,
    };
    let mut d = doc(
        "priority",
        "Normal flows between two ToRs while priority traffic loads the paths via switch 3",
        topology,
        ArrivalsDoc::default(),
        RunDoc {
            interval: 20,
            horizon: 20_000,
            algorithm,
            queue_capacity: Some(200),
            ..Default::default()
        },
    );
    d.flows = Some(FlowWorkload {
        groups: vec![
            FlowGroup {
                source: s(1),
                commodity: c(2),
                count: PRIORITY_FLOWS,
                size: PRIORITY_FLOW_SIZE,
                label: None,
            },
            FlowGroup {
                source: s(2),
                commodity: c(1),
                count: PRIORITY_FLOWS,
                size: PRIORITY_FLOW_SIZE,
                label: None,
            },
        ],
        start_window: [0, 20],
        initial_window: 2,
        ack_delay: 4,
        nic_rate: 1,
    });
    for (from, to) in [(1, 3), (3, 2), (2, 3), (3, 1)] {
        d.events.priority.push(PriorityReservation {
            from: s(from),
            to: s(to),
            rate: PRIORITY_RATE,
            start: 0,
        });
    }
    d
}

/// Every shipped scenario with its file name under `configs/`.
pub fn shipped() -> Vec<(&'static str, ScenarioDoc)> {
    vec![
        ("toy_maxweight.json", toy_line(Algorithm::Maxweight, 1, 1000)),
        ("toy_sharing.json", toy_line(Algorithm::Algorithm1, 100, 10_000)),
        ("line.json", line_network(Algorithm::Algorithm1, 100)),
        ("fabric.json", fabric_ideal(Algorithm::Algorithm1, 1.0)),
        ("fabric_link_failure.json", fabric_link_failure(Algorithm::Heuristic)),
        ("priority.json", priority(Algorithm::Heuristic)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_scenarios_load() {
        for (file, d) in shipped() {
            let cfg = d.clone().into_config().unwrap_or_else(|e| panic!("{file}: {e}"));
            let again = crate::network::load_scenario(&cfg.to_json()).unwrap();
            assert_eq!(again, cfg, "{file}");
        }
    }

    #[test]
    fn fabric_has_124_live_queues() {
        let cfg = config(fabric_ideal(Algorithm::Algorithm1, 1.0));
        assert_eq!(cfg.topology.live_queues().len(), 124);
        let h = cfg.topology.next_hops(s(9), c(8));
        assert_eq!(h.iter().map(|x| x.0).collect::<Vec<_>>(), vec![13, 14]);
        assert_eq!(cfg.arrivals.mean(s(1), c(9)), 1.0);
        assert_eq!(cfg.arrivals.mean(s(3), c(8)), 2.0);
        assert_eq!(cfg.arrivals.mean(s(8), c(8)), 0.0);
    }

    #[test]
    fn failure_scenario_drops_ninth_commodity() {
        let cfg = config(fabric_link_failure(Algorithm::Heuristic));
        assert_eq!(cfg.topology.destinations.len(), 8);
        assert_eq!(cfg.flows.as_ref().unwrap().groups.len(), 56);
    }
}
