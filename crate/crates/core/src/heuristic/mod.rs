//! Switch-level realization of the sharing allocator and a flow-level
//! simulator to exercise it.
//!
//! Switches keep one queue per (port, commodity). The common queue of the
//! ideal model is estimated by summing a commodity's port queues, smoothed
//! estimates travel to neighbours in packet headers, each port runs WFQ with
//! weights built from those estimates, and traffic is split over next hops by
//! hashing a per-flow field into ranges sized by a max-min split.
//!
//! ```
//! use netlb::heuristic::{solve_split, split_fractions};
//!
//! let s = solve_split(&[10, 2], &[4, 4]);
//! assert_eq!(s, vec![0, 8]);
//! assert_eq!(split_fractions(&s), vec![0.0, 1.0]);
//! ```

mod drr;
mod flowsim;
mod queues;
mod split;

pub use drr::DrrScheduler;
pub use flowsim::{
    fct_stats, run_flow_sim, via_share, write_fct_csv, FlowRecord, FlowSimReport, FlowState,
    FlowSummary, HopCount,
};
pub use queues::{
    approx_queue, weight_shares, wfq_weights, PiggybackCursor, PortQueueState, QueueInfoEma,
    DEFAULT_PORT_QUEUE,
};
pub use split::{
    brute_force_split, ecmp_route, hash_index, hash_route, solve_split, solve_split_unit,
    split_fractions, split_level, switch_hash, SPLIT_ORACLE_MAX_HOPS, SPLIT_ORACLE_MAX_TOTAL,
};
