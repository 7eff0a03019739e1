//! Per-link integer rate allocation.
//!
//! Every reconfiguration, each link `(i, j)` splits its interval budget
//! `T * c_ij` among the commodities it carries. [`allocate_rates`] is the
//! sharing allocator (exact minimizer of the per-link quadratic cost),
//! [`maxweight_allocate`] the bang-bang baseline, and
//! [`brute_force_optimum`] an exhaustive oracle for small instances.
//!
//! The fairness scalar `k` is kept as an exact rational so that rounding
//! half-cases and level ties are decided without floating point error.

mod algorithm1;
mod cost;
mod maxweight;
mod oracle;
mod packet_fill;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::AllocError;
use crate::network::CommodityId;

pub use algorithm1::{
    allocate_rates, compute_k, compute_request, explain_allocation, round_half_up,
    round_half_up_exact, x_max,
};
pub use cost::{cost_g, cost_g_exact, exchange_residual, level_l, objective_exact, objective_f64};
pub use maxweight::maxweight_allocate;
pub use oracle::{brute_force_optimum, OracleResult, ORACLE_MAX_BUDGET, ORACLE_MAX_COMMODITIES};
pub use packet_fill::{packet_fill, packet_fill_unit};

/// Exact fairness scalar `k`.
pub type KFactor = Ratio<i64>;

/// Converts a configured cap such as `10.0` or `1.5` to an exact rational.
pub fn k_from_f64(k: f64) -> Result<KFactor, AllocError> {
    if !k.is_finite() || k < 1.0 {
        return Err(AllocError::BadKCap(k.to_string()));
    }
    Ratio::approximate_float(k).ok_or_else(|| AllocError::BadKCap(k.to_string()))
}

pub fn k_to_f64(k: KFactor) -> f64 {
    *k.numer() as f64 / *k.denom() as f64
}

/// One commodity's inputs on a link: local backlog `Q_i^d`, next-hop backlog
/// `Q_j^d`, and the previous interval's allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Demand {
    pub commodity: CommodityId,
    pub q_local: u64,
    pub q_next: u64,
    pub prev_alloc: u64,
}

impl Demand {
    pub fn new(commodity: impl Into<CommodityId>, q_local: u64, q_next: u64, prev_alloc: u64) -> Self {
        Demand {
            commodity: commodity.into(),
            q_local,
            q_next,
            prev_alloc,
        }
    }

    /// `y = Q_i - Q_j + x(t - T)`, possibly negative.
    pub fn request(&self) -> i64 {
        self.q_local as i64 - self.q_next as i64 + self.prev_alloc as i64
    }
}

/// Snapshot of one link at a reconfiguration instant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinkAllocState {
    demands: Vec<Demand>,
    budget: u64,
    #[serde(serialize_with = "ser_k")]
    k_max: KFactor,
}

fn ser_k<S: serde::Serializer>(k: &KFactor, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(k_to_f64(*k))
}

impl LinkAllocState {
    /// Demands are sorted by commodity id, so input order never matters.
    pub fn new(mut demands: Vec<Demand>, budget: u64, k_max: KFactor) -> Result<Self, AllocError> {
        demands.sort_by_key(|d| d.commodity);
        if let Some(w) = demands.windows(2).find(|w| w[0].commodity == w[1].commodity) {
            return Err(AllocError::DuplicateCommodity(w[0].commodity.0));
        }
        if k_max < KFactor::from_integer(1) {
            return Err(AllocError::BadKCap(k_to_f64(k_max).to_string()));
        }
        let prev: u64 = demands.iter().map(|d| d.prev_alloc).sum();
        if prev > budget {
            return Err(AllocError::PrevOverBudget { prev, budget });
        }
        Ok(LinkAllocState { demands, budget, k_max })
    }

    pub fn demands(&self) -> &[Demand] {
        &self.demands
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn k_max(&self) -> KFactor {
        self.k_max
    }
}

/// Requests `y^d`, aligned with the state's demand order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub y: Vec<(CommodityId, i64)>,
}

impl Request {
    pub fn positive_sum(&self) -> i64 {
        self.y.iter().map(|&(_, y)| y.max(0)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Nothing to allocate (no commodities or zero budget).
    Idle,
    /// Every commodity received its rounded cap.
    Direct,
    /// Demand exceeded the budget; unit-by-unit filling.
    PacketFill,
    MaxWeight,
}

/// Rates for one link and interval, aligned with the state's demand order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    pub rates: Vec<(CommodityId, u64)>,
    /// `None` for allocators without a fairness scalar (MaxWeight).
    #[serde(serialize_with = "ser_k_opt")]
    pub k_used: Option<KFactor>,
    /// Cost of `rates`. For MaxWeight this is the linear backlog term only.
    pub objective: f64,
    pub branch: Branch,
}

fn ser_k_opt<S: serde::Serializer>(k: &Option<KFactor>, s: S) -> Result<S::Ok, S::Error> {
    match k {
        Some(k) => s.serialize_some(&k_to_f64(*k)),
        None => s.serialize_none(),
    }
}

impl Allocation {
    pub fn rate(&self, commodity: impl Into<CommodityId>) -> u64 {
        let c = commodity.into();
        self.rates
            .iter()
            .find(|(d, _)| *d == c)
            .map(|&(_, r)| r)
            .unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.rates.iter().map(|&(_, r)| r).sum()
    }

    pub fn values(&self) -> Vec<u64> {
        self.rates.iter().map(|&(_, r)| r).collect()
    }
}
