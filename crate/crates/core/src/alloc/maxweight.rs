use super::{Allocation, Branch, LinkAllocState};

/// Bang-bang baseline: the whole budget goes to the commodity with the largest
/// positive differential backlog `Q_i - Q_j` (lowest id on ties); nothing is
/// sent when no weight is positive.
pub fn maxweight_allocate(state: &LinkAllocState) -> Allocation {
    let mut winner: Option<(usize, i64)> = None;
    for (n, d) in state.demands().iter().enumerate() {
        let w = d.q_local as i64 - d.q_next as i64;
        if w > 0 && winner.is_none_or(|(_, best)| w > best) {
            winner = Some((n, w));
        }
    }
    let mut objective = 0.0;
    let rates = state
        .demands()
        .iter()
        .enumerate()
        .map(|(n, d)| {
            let r = match winner {
                Some((m, w)) if m == n => {
                    objective = -(w as f64) * state.budget() as f64;
                    state.budget()
                }
                _ => 0,
            };
            (d.commodity, r)
        })
        .collect();
    Allocation {
        rates,
        k_used: None,
        objective,
        branch: Branch::MaxWeight,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc::{Demand, KFactor};
    use proptest::prelude::*;

    fn st(rows: &[(u32, u64, u64)], budget: u64) -> LinkAllocState {
        let demands = rows.iter().map(|&(d, ql, qn)| Demand::new(d, ql, qn, 0)).collect();
        LinkAllocState::new(demands, budget, KFactor::from_integer(10)).unwrap()
    }

    #[test]
    fn toy_links() {
        // link (1,2): weights (0, 1) -> commodity 2; link (2,3): (3, 1) -> commodity 1
        let a = maxweight_allocate(&st(&[(1, 4, 4), (2, 3, 2)], 3));
        assert_eq!(a.values(), vec![0, 3]);
        let b = maxweight_allocate(&st(&[(1, 4, 1), (2, 2, 1)], 3));
        assert_eq!(b.values(), vec![3, 0]);
        assert_eq!(b.k_used, None);
    }

    #[test]
    fn negative_weights_ignored() {
        let a = maxweight_allocate(&st(&[(1, 0, 4), (2, 1, 9)], 3));
        assert_eq!(a.total(), 0);
    }

    #[test]
    fn tie_goes_to_lowest_id_in_any_order() {
        let a = maxweight_allocate(&st(&[(1, 3, 0), (2, 3, 0)], 5));
        let b = maxweight_allocate(&st(&[(2, 3, 0), (1, 3, 0)], 5));
        assert_eq!(a.rate(1u32), 5);
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn scaling_backlogs_keeps_the_winner(
            rows in prop::collection::vec((0u64..100, 0u64..100), 1..6),
            scale in 1u64..20,
            budget in 1u64..50,
        ) {
            let base: Vec<(u32, u64, u64)> = rows.iter().enumerate()
                .map(|(n, &(a, b))| (n as u32, a, b)).collect();
            let scaled: Vec<(u32, u64, u64)> = base.iter()
                .map(|&(d, a, b)| (d, a * scale, b * scale)).collect();
            prop_assert_eq!(
                maxweight_allocate(&st(&base, budget)).values(),
                maxweight_allocate(&st(&scaled, budget)).values()
            );
        }
    }
}
