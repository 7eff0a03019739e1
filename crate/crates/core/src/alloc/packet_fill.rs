//! Packet filling: hand out the budget one unit at a time to the commodity
//! with the highest unfulfilled level `y - k v`, lowest id on ties.
//!
//! With `k = p / q` every level is a multiple of `1/q`, so levels are compared
//! as the integers `q y - p v`. The greedy order equals sorting all
//! `(commodity, unit)` slots by (level desc, id asc), which lets the fast
//! path jump straight to the threshold level instead of looping.

use super::{objective_f64, Allocation, Branch, KFactor, LinkAllocState};

fn scaled_requests(state: &LinkAllocState, k: KFactor) -> (Vec<i128>, i128) {
    let (p, q) = (*k.numer() as i128, *k.denom() as i128);
    let ys = state
        .demands()
        .iter()
        .map(|d| q * d.request() as i128)
        .collect();
    (ys, p)
}

fn finish(state: &LinkAllocState, k: KFactor, v: Vec<u64>) -> Allocation {
    Allocation {
        objective: objective_f64(state, &v, k),
        rates: state.demands().iter().map(|d| d.commodity).zip(v).collect(),
        k_used: Some(k),
        branch: Branch::PacketFill,
    }
}

/// Unaccelerated loop: exactly `budget` single-unit iterations.
pub fn packet_fill_unit(state: &LinkAllocState, k: KFactor) -> Allocation {
    let (ys, p) = scaled_requests(state, k);
    let mut v = vec![0u64; ys.len()];
    if !ys.is_empty() {
        for _ in 0..state.budget() {
            let mut best = 0;
            let mut best_level = ys[0] - p * v[0] as i128;
            for (n, &y) in ys.iter().enumerate().skip(1) {
                let level = y - p * v[n] as i128;
                if level > best_level {
                    best = n;
                    best_level = level;
                }
            }
            v[best] += 1;
        }
    }
    finish(state, k, v)
}

/// Number of slots of one commodity at scaled level `>= threshold`.
fn slots_at_or_above(y: i128, p: i128, threshold: i128) -> i128 {
    if y < threshold {
        0
    } else {
        (y - threshold) / p + 1
    }
}

/// Same result as [`packet_fill_unit`], computed by locating the level of the
/// last granted unit with a binary search.
pub fn packet_fill(state: &LinkAllocState, k: KFactor) -> Allocation {
    let (ys, p) = scaled_requests(state, k);
    let budget = state.budget() as i128;
    if ys.is_empty() || budget == 0 {
        return finish(state, k, vec![0; ys.len()]);
    }
    let total = |t: i128| -> i128 { ys.iter().map(|&y| slots_at_or_above(y, p, t)).sum() };

    let top = *ys.iter().max().unwrap();
    // The top commodity alone has `budget` slots at or above `lo`.
    let mut lo = top - p * (budget - 1);
    let mut hi = top;
    // Largest threshold with at least `budget` slots.
    while lo < hi {
        let mid = lo + (hi - lo + 1) / 2;
        if total(mid) >= budget {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let threshold = lo;
    let mut v: Vec<u64> = ys
        .iter()
        .map(|&y| slots_at_or_above(y, p, threshold + 1) as u64)
        .collect();
    let mut left = budget - v.iter().sum::<u64>() as i128;
    for (n, &y) in ys.iter().enumerate() {
        if left == 0 {
            break;
        }
        if slots_at_or_above(y, p, threshold) > v[n] as i128 {
            v[n] += 1;
            left -= 1;
        }
    }
    debug_assert_eq!(left, 0);
    finish(state, k, v)
}
