use std::fmt::Write;

use num_rational::Ratio;

use super::{
    k_to_f64, objective_f64, packet_fill, Allocation, Branch, KFactor, LinkAllocState, Request,
};
use crate::error::AllocError;

/// Nearest integer with halves rounded up: `floor(x + 0.5)`.
pub fn round_half_up(x: f64) -> u64 {
    debug_assert!(x >= 0.0);
    (x + 0.5).floor() as u64
}

/// `floor(r + 1/2)` for a non-negative rational.
pub fn round_half_up_exact(r: Ratio<i128>) -> u64 {
    let (n, d) = (*r.numer(), *r.denom());
    debug_assert!(n >= 0 && d > 0);
    ((2 * n + d) / (2 * d)) as u64
}

pub fn compute_request(state: &LinkAllocState) -> Request {
    Request {
        y: state.demands().iter().map(|d| (d.commodity, d.request())).collect(),
    }
}

/// `max(1, min(K, sum_d [y^d]_+ / budget))`.
pub fn compute_k(request: &Request, budget: u64, k_max: KFactor) -> Result<KFactor, AllocError> {
    if budget == 0 {
        return Err(AllocError::ZeroBudget);
    }
    let ratio = KFactor::new(request.positive_sum(), budget as i64);
    let one = KFactor::from_integer(1);
    Ok(if ratio < one {
        one
    } else if ratio > k_max {
        k_max
    } else {
        ratio
    })
}

/// Largest allocation a commodity accepts: `round([Q_i - Q_j + z]_+ / k)`.
pub fn x_max(q_local: u64, q_next: u64, prev: u64, k: KFactor) -> u64 {
    let y = q_local as i128 - q_next as i128 + prev as i128;
    if y <= 0 {
        return 0;
    }
    let k = Ratio::new(*k.numer() as i128, *k.denom() as i128);
    round_half_up_exact(Ratio::from_integer(y) / k)
}

/// The sharing allocator. Every commodity gets its rounded cap when the caps
/// fit in the budget, otherwise the budget is packet-filled by level.
pub fn allocate_rates(state: &LinkAllocState) -> Allocation {
    let one = KFactor::from_integer(1);
    if state.demands().is_empty() || state.budget() == 0 {
        let rates: Vec<_> = state.demands().iter().map(|d| (d.commodity, 0)).collect();
        let zeros = vec![0; rates.len()];
        return Allocation {
            objective: objective_f64(state, &zeros, one),
            rates,
            k_used: Some(one),
            branch: Branch::Idle,
        };
    }
    let request = compute_request(state);
    let k = compute_k(&request, state.budget(), state.k_max()).expect("budget checked above");
    let caps: Vec<u64> = state
        .demands()
        .iter()
        .map(|d| x_max(d.q_local, d.q_next, d.prev_alloc, k))
        .collect();
    if caps.iter().sum::<u64>() <= state.budget() {
        Allocation {
            objective: objective_f64(state, &caps, k),
            rates: state.demands().iter().map(|d| d.commodity).zip(caps).collect(),
            k_used: Some(k),
            branch: Branch::Direct,
        }
    } else {
        packet_fill(state, k)
    }
}

/// Human-readable step log of [`allocate_rates`] for one state.
pub fn explain_allocation(state: &LinkAllocState) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "budget = {}, K = {}", state.budget(), k_to_f64(state.k_max()));
    let request = compute_request(state);
    for (d, y) in &request.y {
        let _ = writeln!(out, "y[{d}] = {y}");
    }
    if state.budget() == 0 || state.demands().is_empty() {
        let _ = writeln!(out, "nothing to allocate");
    } else {
        let k = compute_k(&request, state.budget(), state.k_max()).expect("positive budget");
        let _ = writeln!(
            out,
            "sum [y]+ = {}, k = {} ({:.6})",
            request.positive_sum(),
            k,
            k_to_f64(k)
        );
        let mut total = 0;
        for d in state.demands() {
            let cap = x_max(d.q_local, d.q_next, d.prev_alloc, k);
            total += cap;
            let _ = writeln!(out, "x_max[{}] = {cap}", d.commodity);
        }
        let branch = if total <= state.budget() { "direct" } else { "packet fill" };
        let _ = writeln!(out, "sum x_max = {total} vs budget {} -> {branch}", state.budget());
    }
    let alloc = allocate_rates(state);
    for (d, r) in &alloc.rates {
        let _ = writeln!(out, "x[{d}] = {r}");
    }
    let _ = writeln!(out, "objective = {}", alloc.objective);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc::{brute_force_optimum, objective_exact, Demand};

    fn k(n: i64) -> KFactor {
        KFactor::from_integer(n)
    }

    fn st(rows: &[(u64, u64, u64)], budget: u64, k_max: i64) -> LinkAllocState {
        let demands = rows
            .iter()
            .enumerate()
            .map(|(n, &(ql, qn, z))| Demand::new(n as u32 + 1, ql, qn, z))
            .collect();
        LinkAllocState::new(demands, budget, k(k_max)).unwrap()
    }

    #[test]
    fn rounding() {
        assert_eq!(round_half_up(4.5), 5);
        assert_eq!(round_half_up(0.0), 0);
        assert_eq!(round_half_up(3.49), 3);
        assert_eq!(round_half_up_exact(Ratio::new(9, 2)), 5);
        assert_eq!(round_half_up_exact(Ratio::new(7, 2)), 4);
        assert_eq!(round_half_up_exact(Ratio::new(349, 100)), 3);
    }

    #[test]
    fn requests() {
        let s = st(&[(30, 0, 0)], 30, 10);
        assert_eq!(compute_request(&s).y[0].1, 30);
        let s = st(&[(5, 9, 2)], 30, 10);
        assert_eq!(compute_request(&s).y[0].1, -2);
    }

    #[test]
    fn requests_from_toy_weights() {
        // link (1,2): weights 0 and 1; link (2,3): weights 3 and 1.
        let l12 = st(&[(4, 4, 0), (3, 2, 0)], 3, 10);
        let l23 = st(&[(4, 1, 0), (2, 1, 0)], 3, 10);
        let y12: Vec<i64> = compute_request(&l12).y.iter().map(|p| p.1).collect();
        let y23: Vec<i64> = compute_request(&l23).y.iter().map(|p| p.1).collect();
        assert_eq!(y12, vec![0, 1]);
        assert_eq!(y23, vec![3, 1]);
    }

    #[test]
    fn k_clamps() {
        let s = st(&[(30, 0, 0), (60, 0, 0)], 30, 10);
        assert_eq!(compute_k(&compute_request(&s), 30, k(10)).unwrap(), k(3));
        let s = st(&[(0, 4, 0), (1, 9, 0)], 30, 10);
        assert_eq!(compute_k(&compute_request(&s), 30, k(10)).unwrap(), k(1));
        let s = st(&[(600, 0, 0)], 30, 10);
        assert_eq!(compute_k(&compute_request(&s), 30, k(10)).unwrap(), k(10));
        assert_eq!(compute_k(&compute_request(&s), 0, k(10)), Err(AllocError::ZeroBudget));
    }

    #[test]
    fn caps() {
        assert_eq!(x_max(10, 3, 2, k(2)), 5);
        assert_eq!(x_max(3, 10, 0, k(2)), 0);
        assert_eq!(x_max(30, 0, 0, k(3)), 10);
    }

    #[test]
    fn wfq_like_split() {
        let a = allocate_rates(&st(&[(30, 0, 0), (60, 0, 0)], 30, 10));
        assert_eq!(a.k_used, Some(k(3)));
        assert_eq!(a.values(), vec![10, 20]);
        assert_eq!(a.branch, Branch::Direct);
    }

    #[test]
    fn nothing_requested() {
        let a = allocate_rates(&st(&[(0, 5, 0), (2, 2, 0)], 30, 10));
        assert_eq!(a.values(), vec![0, 0]);
        assert_eq!(a.k_used, Some(k(1)));
    }

    #[test]
    fn packet_fill_branch() {
        let s = st(&[(9, 0, 0), (1, 0, 0)], 4, 1);
        let a = allocate_rates(&s);
        assert_eq!(a.k_used, Some(k(1)));
        assert_eq!(a.values(), vec![4, 0]);
        assert_eq!(a.branch, Branch::PacketFill);
        assert_eq!(a.objective, -28.0);
        let oracle = brute_force_optimum(&s, k(1)).unwrap();
        assert_eq!(objective_exact(&s, &a.values(), k(1)), oracle.objective);
    }

    #[test]
    fn explain_mentions_branch() {
        let text = explain_allocation(&st(&[(9, 0, 0), (1, 0, 0)], 4, 1));
        assert!(text.contains("packet fill"), "{text}");
        assert!(text.contains("x[d1] = 4"), "{text}");
    }
}
