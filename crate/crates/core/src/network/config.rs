//! Scenario documents (JSON, schema version 1).
//!
//! A document has a `topology` block, an `arrivals` block, a `run` block and
//! two optional blocks used by the flow-level simulator: `flows` and
//! `events`. Unknown keys are rejected everywhere. Run defaults:
//!
//! | key               | default      |
//! |-------------------|--------------|
//! | `interval`        | 100          |
//! | `k_max`           | 10           |
//! | `alpha`           | 5            |
//! | `horizon`         | 100000       |
//! | `seed`            | 1            |
//! | `algorithm`       | `algorithm1` |
//! | `queue_capacity`  | none         |
//! | `warmup_fraction` | 0.2          |
//! | `ema_beta`        | 0.125        |
//!
//! `topology.bound` defaults to the largest link capacity, sink capacity or
//! arrival support value.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    validate_topology, ArrivalLaw, ArrivalSpec, CommodityId, SwitchId, Topology,
};
use crate::error::ConfigError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Algorithm1,
    Maxweight,
    Heuristic,
    Ecmp,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Algorithm1 => "algorithm1",
            Algorithm::Maxweight => "maxweight",
            Algorithm::Heuristic => "heuristic",
            Algorithm::Ecmp => "ecmp",
        }
    }

    /// Whether the algorithm runs on the flow-level simulator.
    pub fn is_flow_level(self) -> bool {
        matches!(self, Algorithm::Heuristic | Algorithm::Ecmp)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "algorithm1" => Ok(Algorithm::Algorithm1),
            "maxweight" => Ok(Algorithm::Maxweight),
            "heuristic" => Ok(Algorithm::Heuristic),
            "ecmp" => Ok(Algorithm::Ecmp),
            other => Err(format!("unknown algorithm `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowGroup {
    /// Switch where the flows enter the network.
    pub source: SwitchId,
    pub commodity: CommodityId,
    pub count: u32,
    /// Flow size in packets.
    pub size: u64,
    /// Priority background traffic reserved on links is configured separately;
    /// this only tags flows for reporting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

fn default_initial_window() -> u64 {
    2
}
fn default_ack_delay() -> u64 {
    4
}
fn default_nic_rate() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowWorkload {
    pub groups: Vec<FlowGroup>,
    /// Flow start slots are drawn uniformly from `[lo, hi)`.
    #[serde(default)]
    pub start_window: [u64; 2],
    #[serde(default = "default_initial_window")]
    pub initial_window: u64,
    /// Slots between the last packet of an epoch settling and the next epoch.
    #[serde(default = "default_ack_delay")]
    pub ack_delay: u64,
    /// Packets a flow may inject per slot.
    #[serde(default = "default_nic_rate")]
    pub nic_rate: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkFailure {
    pub slot: u64,
    pub a: SwitchId,
    pub b: SwitchId,
}

/// Constant-rate priority traffic that takes `rate` packets/slot of a link
/// ahead of normal traffic from `start` on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorityReservation {
    pub from: SwitchId,
    pub to: SwitchId,
    pub rate: u64,
    #[serde(default)]
    pub start: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEvents {
    #[serde(default)]
    pub link_failures: Vec<LinkFailure>,
    #[serde(default)]
    pub priority: Vec<PriorityReservation>,
}

impl ScenarioEvents {
    pub fn is_empty(&self) -> bool {
        self.link_failures.is_empty() && self.priority.is_empty()
    }
}

/// Validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub topology: Topology,
    pub arrivals: ArrivalSpec,
    /// Control-plane interval length T in slots.
    pub interval: u64,
    /// Cap K on the per-link fairness scalar.
    pub k_max: f64,
    /// Rate scale for WFQ weights.
    pub alpha: f64,
    pub horizon: u64,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub queue_capacity: Option<u64>,
    /// Leading fraction of the horizon excluded from time averages.
    pub warmup_fraction: f64,
    pub ema_beta: f64,
    pub flows: Option<FlowWorkload>,
    pub events: ScenarioEvents,
}

// ---- document layer -------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDoc {
    pub from: SwitchId,
    pub to: SwitchId,
    pub capacity: u64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub bidirectional: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinkDoc {
    pub switch: SwitchId,
    pub commodity: CommodityId,
    pub capacity: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NextHopDoc {
    pub switch: SwitchId,
    pub commodity: CommodityId,
    pub via: Vec<SwitchId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyDoc {
    pub switches: Vec<SwitchId>,
    pub commodities: Vec<CommodityId>,
    #[serde(default)]
    pub links: Vec<LinkDoc>,
    #[serde(default)]
    pub sinks: Vec<SinkDoc>,
    #[serde(default)]
    pub next_hops: Vec<NextHopDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceDoc {
    pub switch: SwitchId,
    pub commodity: CommodityId,
    pub law: ArrivalLaw,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalsDoc {
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub sources: Vec<SourceDoc>,
}

impl Default for ArrivalsDoc {
    fn default() -> Self {
        ArrivalsDoc {
            scale: 1.0,
            sources: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunDoc {
    pub interval: u64,
    pub k_max: f64,
    pub alpha: f64,
    pub horizon: u64,
    pub seed: u64,
    pub algorithm: Algorithm,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub queue_capacity: Option<u64>,
    pub warmup_fraction: f64,
    pub ema_beta: f64,
}

impl Default for RunDoc {
    fn default() -> Self {
        RunDoc {
            interval: 100,
            k_max: 10.0,
            alpha: 5.0,
            horizon: 100_000,
            seed: 1,
            algorithm: Algorithm::Algorithm1,
            queue_capacity: None,
            warmup_fraction: 0.2,
            ema_beta: 0.125,
        }
    }
}

/// Serialized form of a [`ScenarioConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub topology: TopologyDoc,
    #[serde(default)]
    pub arrivals: ArrivalsDoc,
    #[serde(default)]
    pub run: RunDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flows: Option<FlowWorkload>,
    #[serde(default, skip_serializing_if = "ScenarioEvents::is_empty")]
    pub events: ScenarioEvents,
}

pub fn load_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    doc.into_config()
}

pub fn load_scenario_file(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_scenario(&text)
}

impl ScenarioDoc {
    pub fn into_config(self) -> Result<ScenarioConfig, ConfigError> {
        if self.version != SCHEMA_VERSION {
            return Err(ConfigError::invalid(
                "version",
                format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.version),
            ));
        }
        let run = &self.run;
        if run.interval == 0 {
            return Err(ConfigError::invalid("run.interval", "must be >= 1"));
        }
        if !run.horizon.is_multiple_of(run.interval) {
            return Err(ConfigError::invalid(
                "run.horizon",
                format!("{} is not a multiple of interval {}", run.horizon, run.interval),
            ));
        }
        if !(run.k_max.is_finite() && run.k_max >= 1.0) {
            return Err(ConfigError::invalid("run.k_max", format!("must be >= 1, got {}", run.k_max)));
        }
        if !(run.alpha.is_finite() && run.alpha > 0.0) {
            return Err(ConfigError::invalid("run.alpha", format!("must be > 0, got {}", run.alpha)));
        }
        if !(0.0..1.0).contains(&run.warmup_fraction) {
            return Err(ConfigError::invalid("run.warmup_fraction", "must lie in [0, 1)"));
        }
        if !(run.ema_beta > 0.0 && run.ema_beta <= 1.0) {
            return Err(ConfigError::invalid("run.ema_beta", "must lie in (0, 1]"));
        }
        if run.queue_capacity == Some(0) {
            return Err(ConfigError::invalid("run.queue_capacity", "must be positive"));
        }
        if !(self.arrivals.scale.is_finite() && (0.0..=1.0).contains(&self.arrivals.scale)) {
            return Err(ConfigError::invalid("arrivals.scale", "must lie in [0, 1]"));
        }

        let mut topology = build_topology(&self.topology)?;

        let mut arrivals = ArrivalSpec {
            scale: self.arrivals.scale,
            ..Default::default()
        };
        for (n, src) in self.arrivals.sources.iter().enumerate() {
            let field = format!("arrivals.sources[{n}]");
            src.law.check().map_err(|m| ConfigError::invalid(&field, m))?;
            if !topology.switches.contains(&src.switch) {
                return Err(ConfigError::invalid(&field, format!("unknown switch {}", src.switch)));
            }
            if !topology.destinations.contains(&src.commodity) {
                return Err(ConfigError::invalid(&field, format!("unknown commodity {}", src.commodity)));
            }
            if arrivals.sources.insert((src.switch, src.commodity), src.law).is_some() {
                return Err(ConfigError::invalid(&field, "duplicate source"));
            }
        }

        topology.bound = match self.topology.bound {
            Some(b) => b,
            None => topology.max_capacity().max(arrivals.max_support()).max(1),
        };
        let violations = validate_topology(&topology);
        if !violations.is_empty() {
            return Err(ConfigError::Topology(violations));
        }
        for (&(i, d), law) in &arrivals.sources {
            if law.max() > topology.bound {
                return Err(ConfigError::invalid(
                    "arrivals",
                    format!("source {i}/{d} support {} exceeds bound {}", law.max(), topology.bound),
                ));
            }
            if law.max() > 0 && !topology.is_live_queue(i, d) {
                return Err(ConfigError::invalid(
                    "arrivals",
                    format!("source {i}/{d} feeds a queue with no next hop and no sink"),
                ));
            }
        }

        if let Some(flows) = &self.flows {
            check_flows(flows, &topology)?;
        }
        for (n, f) in self.events.link_failures.iter().enumerate() {
            if topology.capacity(f.a, f.b) == 0 && topology.capacity(f.b, f.a) == 0 {
                return Err(ConfigError::invalid(
                    format!("events.link_failures[{n}]"),
                    format!("no link between {} and {}", f.a, f.b),
                ));
            }
        }
        for (n, p) in self.events.priority.iter().enumerate() {
            if p.rate > topology.capacity(p.from, p.to) {
                return Err(ConfigError::invalid(
                    format!("events.priority[{n}]"),
                    format!("rate {} exceeds capacity of {}->{}", p.rate, p.from, p.to),
                ));
            }
        }
        if self.run.algorithm.is_flow_level() && self.flows.is_none() {
            return Err(ConfigError::invalid(
                "flows",
                format!("algorithm {} needs a flows block", self.run.algorithm),
            ));
        }

        Ok(ScenarioConfig {
            name: self.name,
            topology,
            arrivals,
            interval: self.run.interval,
            k_max: self.run.k_max,
            alpha: self.run.alpha,
            horizon: self.run.horizon,
            seed: self.run.seed,
            algorithm: self.run.algorithm,
            queue_capacity: self.run.queue_capacity,
            warmup_fraction: self.run.warmup_fraction,
            ema_beta: self.run.ema_beta,
            flows: self.flows,
            events: self.events,
        })
    }
}

fn build_topology(doc: &TopologyDoc) -> Result<Topology, ConfigError> {
    let mut t = Topology::default();
    for &s in &doc.switches {
        if !t.switches.insert(s) {
            return Err(ConfigError::invalid("topology.switches", format!("duplicate switch {s}")));
        }
    }
    for &d in &doc.commodities {
        if !t.destinations.insert(d) {
            return Err(ConfigError::invalid("topology.commodities", format!("duplicate commodity {d}")));
        }
    }
    for (n, l) in doc.links.iter().enumerate() {
        let mut dirs = vec![(l.from, l.to)];
        if l.bidirectional {
            dirs.push((l.to, l.from));
        }
        for key in dirs {
            if t.link_capacity.insert(key, l.capacity).is_some() {
                return Err(ConfigError::invalid(
                    format!("topology.links[{n}]"),
                    format!("duplicate link {}->{}", key.0, key.1),
                ));
            }
        }
    }
    for (n, s) in doc.sinks.iter().enumerate() {
        if t.dest_capacity.insert((s.switch, s.commodity), s.capacity).is_some() {
            return Err(ConfigError::invalid(format!("topology.sinks[{n}]"), "duplicate sink"));
        }
    }
    for (n, h) in doc.next_hops.iter().enumerate() {
        let via: BTreeSet<SwitchId> = h.via.iter().copied().collect();
        if via.len() != h.via.len() {
            return Err(ConfigError::invalid(format!("topology.next_hops[{n}]"), "repeated next hop"));
        }
        if via.is_empty() {
            continue;
        }
        if t.next_hops.insert((h.switch, h.commodity), via).is_some() {
            return Err(ConfigError::invalid(
                format!("topology.next_hops[{n}]"),
                format!("duplicate entry for {}/{}", h.switch, h.commodity),
            ));
        }
    }
    Ok(t)
}

fn check_flows(flows: &FlowWorkload, topology: &Topology) -> Result<(), ConfigError> {
    if flows.start_window[0] > flows.start_window[1] {
        return Err(ConfigError::invalid("flows.start_window", "lo must not exceed hi"));
    }
    if flows.initial_window == 0 || flows.nic_rate == 0 {
        return Err(ConfigError::invalid("flows", "initial_window and nic_rate must be positive"));
    }
    for (n, g) in flows.groups.iter().enumerate() {
        let field = format!("flows.groups[{n}]");
        if !topology.switches.contains(&g.source) {
            return Err(ConfigError::invalid(&field, format!("unknown switch {}", g.source)));
        }
        if !topology.destinations.contains(&g.commodity) {
            return Err(ConfigError::invalid(&field, format!("unknown commodity {}", g.commodity)));
        }
        if g.size == 0 {
            return Err(ConfigError::invalid(&field, "flow size must be positive"));
        }
        if !topology.is_live_queue(g.source, g.commodity) {
            return Err(ConfigError::invalid(&field, "source cannot forward this commodity"));
        }
    }
    Ok(())
}

impl ScenarioConfig {
    /// Canonical document for this config; re-loading it yields an equal config.
    pub fn to_doc(&self) -> ScenarioDoc {
        let t = &self.topology;
        ScenarioDoc {
            version: SCHEMA_VERSION,
            name: self.name.clone(),
            description: None,
            topology: TopologyDoc {
                switches: t.switches.iter().copied().collect(),
                commodities: t.destinations.iter().copied().collect(),
                links: t
                    .link_capacity
                    .iter()
                    .map(|(&(from, to), &capacity)| LinkDoc {
                        from,
                        to,
                        capacity,
                        bidirectional: false,
                    })
                    .collect(),
                sinks: t
                    .dest_capacity
                    .iter()
                    .map(|(&(switch, commodity), &capacity)| SinkDoc { switch, commodity, capacity })
                    .collect(),
                next_hops: t
                    .next_hops
                    .iter()
                    .map(|(&(switch, commodity), via)| NextHopDoc {
                        switch,
                        commodity,
                        via: via.iter().copied().collect(),
                    })
                    .collect(),
                bound: Some(t.bound),
            },
            arrivals: ArrivalsDoc {
                scale: self.arrivals.scale,
                sources: self
                    .arrivals
                    .sources
                    .iter()
                    .map(|(&(switch, commodity), &law)| SourceDoc { switch, commodity, law })
                    .collect(),
            },
            run: RunDoc {
                interval: self.interval,
                k_max: self.k_max,
                alpha: self.alpha,
                horizon: self.horizon,
                seed: self.seed,
                algorithm: self.algorithm,
                queue_capacity: self.queue_capacity,
                warmup_fraction: self.warmup_fraction,
                ema_beta: self.ema_beta,
            },
            flows: self.flows.clone(),
            events: self.events.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("scenario docs always serialize")
    }

    /// SHA-256 of the canonical document, hex encoded.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(&self.to_doc()).expect("scenario docs always serialize");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Sum of arrival means per commodity, for reporting.
    pub fn offered_load(&self) -> BTreeMap<CommodityId, f64> {
        let mut out = BTreeMap::new();
        for &(i, d) in self.arrivals.sources.keys() {
            *out.entry(d).or_insert(0.0) += self.arrivals.mean(i, d);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "version": 1,
        "name": "two",
        "topology": {
            "switches": [1, 2],
            "commodities": [1],
            "links": [{"from": 1, "to": 2, "capacity": 3}],
            "sinks": [{"switch": 2, "commodity": 1, "capacity": 3}],
            "next_hops": [{"switch": 1, "commodity": 1, "via": [2]}]
        },
        "arrivals": {"sources": [{"switch": 1, "commodity": 1, "law": {"kind": "constant", "value": 1}}]}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = load_scenario(MINIMAL).unwrap();
        assert_eq!(cfg.interval, 100);
        assert_eq!(cfg.k_max, 10.0);
        assert_eq!(cfg.alpha, 5.0);
        assert_eq!(cfg.horizon, 100_000);
        assert_eq!(cfg.algorithm, Algorithm::Algorithm1);
        assert_eq!(cfg.topology.bound, 3);
        assert_eq!(cfg.ema_beta, 0.125);
    }

    #[test]
    fn horizon_must_be_multiple_of_interval() {
        let text = MINIMAL.replace(
            "\"arrivals\"",
            "\"run\": {\"interval\": 100, \"horizon\": 150}, \"arrivals\"",
        );
        match load_scenario(&text) {
            Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "run.horizon"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let text = MINIMAL.replace("\"name\": \"two\",", "\"name\": \"two\", \"colour\": 1,");
        match load_scenario(&text) {
            Err(ConfigError::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("colour"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn topology_violations_surface() {
        let text = MINIMAL.replace("\"capacity\": 3}]", "\"capacity\": 0}]");
        let err = load_scenario(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Topology(_)), "{err}");
    }

    #[test]
    fn doc_round_trip_is_identity() {
        let cfg = load_scenario(MINIMAL).unwrap();
        let again = load_scenario(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.digest(), again.digest());
    }

    #[test]
    fn arrivals_into_dead_queue_rejected() {
        let text = MINIMAL.replace(
            "\"sources\": [",
            "\"sources\": [{\"switch\": 2, \"commodity\": 1, \"law\": {\"kind\": \"constant\", \"value\": 0}}, ",
        );
        assert!(load_scenario(&text).is_ok());
        let text = MINIMAL.replace("\"sinks\": [{\"switch\": 2, \"commodity\": 1, \"capacity\": 3}],", "");
        assert!(load_scenario(&text).is_err());
    }
}
