use num_rational::Ratio;

use super::{cost_g_exact, KFactor, LinkAllocState};
use crate::error::AllocError;

pub const ORACLE_MAX_COMMODITIES: usize = 5;
pub const ORACLE_MAX_BUDGET: u64 = 15;
/// Instances outside the box above are still accepted when the number of
/// candidate allocations stays below this (e.g. two commodities, budget 30).
pub const ORACLE_MAX_CANDIDATES: u128 = 20_000;

/// Number of non-negative integer vectors of length `n` with sum <= `budget`.
fn candidates(n: usize, budget: u64) -> u128 {
    // C(budget + n, n)
    let mut c: u128 = 1;
    for i in 1..=n as u128 {
        c = c * (budget as u128 + i) / i;
        if c > u64::MAX as u128 {
            return c;
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub objective: Ratio<i128>,
    pub objective_f64: f64,
    /// Lexicographically smallest minimizer.
    pub rates: Vec<u64>,
}

/// Exhaustive minimum of the per-link cost over all integer allocations with
/// total at most the budget. Independent of the greedy allocator: it only
/// evaluates the cost function.
pub fn brute_force_optimum(state: &LinkAllocState, k: KFactor) -> Result<OracleResult, AllocError> {
    let n = state.demands().len();
    let budget = state.budget();
    let in_box = n <= ORACLE_MAX_COMMODITIES && budget <= ORACLE_MAX_BUDGET;
    if !in_box && candidates(n, budget) > ORACLE_MAX_CANDIDATES {
        return Err(AllocError::OracleGuard { commodities: n, budget });
    }
    // costs[d][v] for v in 0..=budget
    let costs: Vec<Vec<Ratio<i128>>> = state
        .demands()
        .iter()
        .map(|d| {
            (0..=budget)
                .map(|v| cost_g_exact(v, d.q_local, d.q_next, d.prev_alloc, k))
                .collect()
        })
        .collect();

    let mut best: Option<(Ratio<i128>, Vec<u64>)> = None;
    let mut current = vec![0u64; n];
    enumerate(&costs, 0, budget, Ratio::from_integer(0), &mut current, &mut best);
    let (objective, rates) = best.expect("the all-zero allocation is always feasible");
    let objective_f64 = *objective.numer() as f64 / *objective.denom() as f64;
    Ok(OracleResult {
        objective,
        objective_f64,
        rates,
    })
}

fn enumerate(
    costs: &[Vec<Ratio<i128>>],
    idx: usize,
    remaining: u64,
    partial: Ratio<i128>,
    current: &mut Vec<u64>,
    best: &mut Option<(Ratio<i128>, Vec<u64>)>,
) {
    if idx == costs.len() {
        let better = match best {
            Some((b, _)) => partial < *b,
            None => true,
        };
        if better {
            *best = Some((partial, current.clone()));
        }
        return;
    }
    for v in 0..=remaining {
        current[idx] = v;
        enumerate(costs, idx + 1, remaining - v, partial + costs[idx][v as usize], current, best);
    }
    current[idx] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc::Demand;

    fn state(rows: &[(u64, u64, u64)], budget: u64, k_max: i64) -> LinkAllocState {
        let demands = rows
            .iter()
            .enumerate()
            .map(|(n, &(ql, qn, z))| Demand::new(n as u32 + 1, ql, qn, z))
            .collect();
        LinkAllocState::new(demands, budget, KFactor::from_integer(k_max)).unwrap()
    }

    #[test]
    fn zero_budget_is_trivial() {
        let s = state(&[(5, 0, 0), (7, 1, 0)], 0, 10);
        let r = brute_force_optimum(&s, KFactor::from_integer(1)).unwrap();
        assert_eq!(r.objective, Ratio::from_integer(0));
        assert_eq!(r.rates, vec![0, 0]);
    }

    #[test]
    fn nine_one_split_of_four() {
        let s = state(&[(9, 0, 0), (1, 0, 0)], 4, 1);
        let r = brute_force_optimum(&s, KFactor::from_integer(1)).unwrap();
        assert_eq!(r.objective, Ratio::from_integer(-28));
        assert_eq!(r.rates, vec![4, 0]);
        // (3, 1) costs -27 + 4.5 - 1 + 0.5 = -23
        let alt = cost_g_exact(3, 9, 0, 0, KFactor::from_integer(1))
            + cost_g_exact(1, 1, 0, 0, KFactor::from_integer(1));
        assert_eq!(alt, Ratio::from_integer(-23));
    }

    #[test]
    fn two_commodity_wfq_split() {
        let s = state(&[(30, 0, 0), (60, 0, 0)], 30, 10);
        let r = brute_force_optimum(&s, KFactor::from_integer(3)).unwrap();
        assert_eq!(r.rates, vec![10, 20]);
    }

    #[test]
    fn candidate_count() {
        assert_eq!(candidates(4, 12), 1820);
        assert_eq!(candidates(5, 15), 15504);
        assert_eq!(candidates(2, 30), 496);
    }

    #[test]
    fn guard_rejects_large_instances() {
        let s = state(&[(1, 0, 0), (1, 0, 0), (1, 0, 0), (1, 0, 0)], 40, 1);
        assert!(matches!(
            brute_force_optimum(&s, KFactor::from_integer(1)),
            Err(AllocError::OracleGuard { .. })
        ));
    }
}
