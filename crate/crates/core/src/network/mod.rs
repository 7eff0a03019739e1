//! Network model: topology, derived routing sets, arrival laws and the
//! scenario document that ties them to a run.

pub mod arrivals;
pub mod config;
mod derive;
mod topology;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use arrivals::{ArrivalLaw, ArrivalSampler, ArrivalSpec};
pub use config::{
    load_scenario, load_scenario_file, Algorithm, FlowGroup, FlowWorkload, LinkFailure,
    PriorityReservation, ScenarioConfig, ScenarioDoc, ScenarioEvents,
};
pub use derive::{derive_sets, DerivedSets};
pub use topology::Topology;
pub use validate::{validate_topology, Violation};

/// Switch identifier (an element of S).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SwitchId(pub u32);

/// Commodity identifier; a commodity is all traffic bound for one destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CommodityId(pub u32);

impl fmt::Display for SwitchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl fmt::Display for CommodityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}", self.0)
    }
}

impl From<u32> for SwitchId {
    fn from(v: u32) -> Self {
        SwitchId(v)
    }
}

impl From<u32> for CommodityId {
    fn from(v: u32) -> Self {
        CommodityId(v)
    }
}
