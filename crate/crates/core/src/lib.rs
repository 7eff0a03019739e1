//! Slotted-time simulation and allocation kernels for throughput-optimal
//! in-network load balancing.
//!
//! * [`network`]: topology, routing sets, arrival laws, scenario documents.
//! * [`alloc`]: per-link rate allocation (sharing allocator, packet filling,
//!   MaxWeight) and an exhaustive oracle.
//! * [`sim`]: the slotted engine with token-bucket data plane and metrics.
//! * [`heuristic`]: the switch-level realization (port queues, WFQ weights,
//!   max-min hash splitting) and a flow-level simulator with an ECMP baseline.
//! * [`scenarios`]: builders for the shipped experiment topologies.

pub mod alloc;
pub mod error;
pub mod heuristic;
pub mod network;
pub mod scenarios;
pub mod sim;

pub use error::{AllocError, ConfigError, SimError};
