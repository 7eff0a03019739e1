use crate::error::AllocError;
use crate::network::SwitchId;

/// Largest instance [`brute_force_split`] will enumerate.
pub const SPLIT_ORACLE_MAX_HOPS: usize = 3;
pub const SPLIT_ORACLE_MAX_TOTAL: u64 = 12;

fn level(q: u64, r: u64, s: u64) -> i64 {
    q as i64 - r as i64 + s as i64
}

/// Best achievable `min_j (Q_j - r_j + s_j)` over all integer `s` with
/// `sum(s) = sum(r)`, by enumeration. Returns the level and the first
/// optimal split in lexicographic order.
pub fn brute_force_split(q: &[u64], r: &[u64]) -> Result<(i64, Vec<u64>), AllocError> {
    assert_eq!(q.len(), r.len());
    let total: u64 = r.iter().sum();
    if q.is_empty() || q.len() > SPLIT_ORACLE_MAX_HOPS || total > SPLIT_ORACLE_MAX_TOTAL {
        return Err(AllocError::SplitGuard { hops: q.len(), total });
    }
    let n = q.len();
    let mut best: Option<(i64, Vec<u64>)> = None;
    let mut s = vec![0u64; n];
    loop {
        if s.iter().sum::<u64>() == total {
            let m = (0..n).map(|j| level(q[j], r[j], s[j])).min().unwrap();
            if best.as_ref().is_none_or(|(b, _)| m > *b) {
                best = Some((m, s.clone()));
            }
        }
        // odometer over [0, total]^n
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(best.expect("at least one split sums to the total"));
            }
            k -= 1;
            if s[k] < total {
                s[k] += 1;
                break;
            }
            s[k] = 0;
        }
    }
}

/// Max-min split of last interval's traffic `sum(r)` over the next hops.
/// Equivalent to repeatedly giving one packet to the lowest current level
/// (lowest index on ties), computed in bulk.
pub fn solve_split(q: &[u64], r: &[u64]) -> Vec<u64> {
    assert_eq!(q.len(), r.len());
    assert!(!q.is_empty(), "split needs at least one next hop");
    let total: u64 = r.iter().sum();
    let levels: Vec<i64> = q.iter().zip(r).map(|(&q, &r)| level(q, r, 0)).collect();
    let need = |l: i64| -> u64 { levels.iter().map(|&x| (l - x).max(0) as u64).sum() };
    let lo0 = *levels.iter().min().unwrap();
    // largest water level the budget can fill
    let (mut lo, mut hi) = (lo0, lo0 + total as i64);
    while lo < hi {
        let mid = lo + (hi - lo + 1) / 2;
        if need(mid) <= total {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let mut s: Vec<u64> = levels.iter().map(|&x| (lo - x).max(0) as u64).collect();
    let mut left = total - s.iter().sum::<u64>();
    for (j, &x) in levels.iter().enumerate() {
        if left == 0 {
            break;
        }
        if x <= lo {
            s[j] += 1;
            left -= 1;
        }
    }
    s
}

/// Unit-step form of [`solve_split`], kept as a reference.
pub fn solve_split_unit(q: &[u64], r: &[u64]) -> Vec<u64> {
    let total: u64 = r.iter().sum();
    let mut s = vec![0u64; q.len()];
    for _ in 0..total {
        let j = (0..q.len()).min_by_key(|&j| (level(q[j], r[j], s[j]), j)).unwrap();
        s[j] += 1;
    }
    s
}

/// Achieved `min_j (Q_j - r_j + s_j)`.
pub fn split_level(q: &[u64], r: &[u64], s: &[u64]) -> i64 {
    (0..q.len()).map(|j| level(q[j], r[j], s[j])).min().unwrap_or(0)
}

/// Normalized split; uniform when nothing was sent.
pub fn split_fractions(s: &[u64]) -> Vec<f64> {
    let total: u64 = s.iter().sum();
    if total == 0 {
        return vec![1.0 / s.len() as f64; s.len()];
    }
    s.iter().map(|&x| x as f64 / total as f64).collect()
}

/// Index of the contiguous hash range containing `hash` when the 64-bit
/// space is cut in proportion to `fractions`.
pub fn hash_index(hash: u64, fractions: &[f64]) -> usize {
    assert!(!fractions.is_empty());
    debug_assert!((fractions.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let x = hash as f64 / 18_446_744_073_709_551_616.0;
    let last = fractions.iter().rposition(|&f| f > 0.0).unwrap_or(fractions.len() - 1);
    let mut cum = 0.0;
    for (k, &f) in fractions.iter().enumerate().take(last) {
        cum += f;
        if f > 0.0 && x < cum {
            return k;
        }
    }
    last
}

/// Next hop for `hash` under `fractions`, both in ascending next-hop order.
pub fn hash_route(hash: u64, hops: &[SwitchId], fractions: &[f64]) -> SwitchId {
    assert_eq!(hops.len(), fractions.len());
    hops[hash_index(hash, fractions)]
}

/// Equal split over the available next hops.
pub fn ecmp_route(hash: u64, hops: &[SwitchId]) -> SwitchId {
    assert!(!hops.is_empty());
    hops[hash_index(hash, &vec![1.0 / hops.len() as f64; hops.len()])]
}

/// Per-switch view of a packet's hash so that consecutive switches split
/// independently.
pub fn switch_hash(hash: u64, switch: SwitchId) -> u64 {
    let mut z = hash ^ (switch.0 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
