//! Per-slot token spending on one link.
//!
//! Tokens are the unspent part of the interval allocation. Each slot a
//! commodity aims for `ceil(tokens / slots_remaining)`; when the aims overflow
//! the link capacity, everyone keeps `floor(tokens / slots_remaining)` and
//! the spare units go to the largest remainders (lowest index on ties).
//!
//! Invariant between slots: `sum(tokens) <= slots_remaining * capacity`.

/// Service targets before looking at backlog.
pub fn schedule_targets(tokens: &[u64], capacity: u64, slots_remaining: u64) -> Vec<u64> {
    let mut out = vec![0; tokens.len()];
    schedule_targets_into(tokens, capacity, slots_remaining, &mut out, &mut Vec::new());
    out
}

/// Allocation-free form of [`schedule_targets`]; `scratch` is reused between calls.
pub fn schedule_targets_into(
    tokens: &[u64],
    capacity: u64,
    slots_remaining: u64,
    out: &mut [u64],
    scratch: &mut Vec<(u64, usize)>,
) {
    assert!(slots_remaining > 0, "token schedule called past the interval end");
    let total: u64 = tokens.iter().sum();
    assert!(
        total <= slots_remaining * capacity,
        "token invariant broken: {total} tokens for {slots_remaining} slots of capacity {capacity}"
    );
    scratch.clear();
    let mut base = 0;
    for (n, &t) in tokens.iter().enumerate() {
        out[n] = t / slots_remaining;
        base += out[n];
        let r = t % slots_remaining;
        if r > 0 {
            scratch.push((r, n));
        }
    }
    let mut spare = capacity - base;
    if scratch.len() as u64 <= spare {
        for &(_, n) in scratch.iter() {
            out[n] += 1;
        }
        return;
    }
    scratch.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, n) in scratch.iter() {
        if spare == 0 {
            break;
        }
        out[n] += 1;
        spare -= 1;
    }
}

/// Per-commodity service for this slot, limited by the backlog available to
/// this link.
pub fn data_plane_schedule(
    tokens: &[u64],
    backlog: &[u64],
    capacity: u64,
    slots_remaining: u64,
) -> Vec<u64> {
    schedule_targets(tokens, capacity, slots_remaining)
        .into_iter()
        .zip(backlog)
        .map(|(t, &b)| t.min(b))
        .collect()
}

/// Spends `served` and restores the invariant for the next slot. Tokens a
/// starved commodity can no longer use are forfeited (returns the count).
pub fn settle_tokens(
    tokens: &mut [u64],
    targets: &[u64],
    served: &[u64],
    capacity: u64,
    slots_remaining: u64,
) -> u64 {
    for (t, &s) in tokens.iter_mut().zip(served) {
        debug_assert!(s <= *t);
        *t -= s;
    }
    let limit = (slots_remaining - 1) * capacity;
    let total: u64 = tokens.iter().sum();
    if total <= limit {
        return 0;
    }
    let mut excess = total - limit;
    let mut forfeited = 0;
    for n in 0..tokens.len() {
        if excess == 0 {
            break;
        }
        let short = targets[n] - served[n];
        let cut = short.min(excess).min(tokens[n]);
        tokens[n] -= cut;
        excess -= cut;
        forfeited += cut;
    }
    assert_eq!(excess, 0, "starvation shortfall must cover the token excess");
    forfeited
}
