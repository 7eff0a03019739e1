//! Slotted-time engine for the ideal (counter-level) model.
//!
//! Every `T` slots each link runs the configured allocator on a frozen
//! snapshot of the queues; between reconfigurations the per-link token
//! buckets pace the allocation out slot by slot. Within a slot the order is
//! serve, deliver, depart to sinks, admit exogenous arrivals, spend tokens.
//!
//! ```
//! use netlb::network::load_scenario;
//! use netlb::sim::run;
//!
//! let cfg = load_scenario(r#"{
//!     "version": 1, "name": "pipe",
//!     "topology": {
//!         "switches": [1, 2], "commodities": [1],
//!         "links": [{"from": 1, "to": 2, "capacity": 2}],
//!         "sinks": [{"switch": 2, "commodity": 1, "capacity": 2}],
//!         "next_hops": [{"switch": 1, "commodity": 1, "via": [2]}]
//!     },
//!     "arrivals": {"sources": [{"switch": 1, "commodity": 1, "law": {"kind": "constant", "value": 1}}]},
//!     "run": {"interval": 10, "horizon": 1000}
//! }"#).unwrap();
//! let (report, _trace) = run(&cfg).unwrap();
//! assert!(report.invariants.is_clean());
//! ```

pub mod dataplane;
mod engine;
mod metrics;
mod trace;

pub use dataplane::{data_plane_schedule, schedule_targets, settle_tokens};
pub use engine::{run, run_with, RunOptions, SimState, Simulator, WindowChoice};
pub use metrics::{collect_metrics, InvariantReport, MetricsReport, QueueAverage, Totals};
pub use trace::{
    read_binary_trace, write_binary_trace, write_trace_csv, BinaryTrace, KRecord, SlotRecord,
    SlotTrace, TraceLevel, BINARY_MAGIC, BINARY_VERSION, DEFAULT_STRIDE,
};
