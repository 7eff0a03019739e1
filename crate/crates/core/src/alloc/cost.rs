use num_rational::Ratio;

use super::{KFactor, LinkAllocState};

/// Per-commodity cost `v (Q_j - Q_i) + (k/2) (v - z/k)^2`.
pub fn cost_g(v: u64, q_local: u64, q_next: u64, prev: u64, k: f64) -> f64 {
    let v = v as f64;
    let shifted = v - prev as f64 / k;
    v * (q_next as f64 - q_local as f64) + 0.5 * k * shifted * shifted
}

/// Unfulfilled level `Q_i - Q_j + z - k v`.
pub fn level_l(v: u64, q_local: u64, q_next: u64, prev: u64, k: f64) -> f64 {
    q_local as f64 - q_next as f64 + prev as f64 - k * v as f64
}

/// Residual of the pairwise exchange identity: moving one unit of service
/// from `e` to `d` changes the cost by `l_e - l_d`. Each tuple is
/// `(v, q_local, q_next, prev)`; zero up to rounding.
pub fn exchange_residual(d: (u64, u64, u64, u64), e: (u64, u64, u64, u64), k: f64) -> f64 {
    let g = |(v, ql, qn, z): (u64, u64, u64, u64), dv: u64| cost_g(v + dv, ql, qn, z, k);
    let l = |(v, ql, qn, z): (u64, u64, u64, u64)| level_l(v, ql, qn, z, k);
    let lhs = g(d, 1) + g(e, 0) - g(d, 0) - g(e, 1);
    lhs - (l(e) - l(d))
}

pub fn cost_g_exact(v: u64, q_local: u64, q_next: u64, prev: u64, k: KFactor) -> Ratio<i128> {
    let k = Ratio::new(*k.numer() as i128, *k.denom() as i128);
    let v = Ratio::from_integer(v as i128);
    let z = Ratio::from_integer(prev as i128);
    let diff = Ratio::from_integer(q_next as i128 - q_local as i128);
    let shifted = v - z / k;
    v * diff + k * shifted * shifted / Ratio::from_integer(2)
}

/// Exact Problem-5 cost of `rates` (aligned with the state's demands).
pub fn objective_exact(state: &LinkAllocState, rates: &[u64], k: KFactor) -> Ratio<i128> {
    state
        .demands()
        .iter()
        .zip(rates)
        .map(|(d, &v)| cost_g_exact(v, d.q_local, d.q_next, d.prev_alloc, k))
        .sum()
}

pub fn objective_f64(state: &LinkAllocState, rates: &[u64], k: KFactor) -> f64 {
    let k = super::k_to_f64(k);
    state
        .demands()
        .iter()
        .zip(rates)
        .map(|(d, &v)| cost_g(v, d.q_local, d.q_next, d.prev_alloc, k))
        .sum()
}
