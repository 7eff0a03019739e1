use serde::{Deserialize, Serialize};

use super::trace::{KRecord, SlotTrace};
use crate::error::SimError;
use crate::network::{Algorithm, CommodityId, ScenarioConfig, SwitchId};

/// Violation counters from the runtime checks. All zero on a correct run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub slots_checked: u64,
    pub intervals_checked: u64,
    /// Network-wide per-commodity packet balance.
    pub conservation: u64,
    /// Per-slot link service above capacity.
    pub capacity: u64,
    /// Interval service above the interval allocation.
    pub token_bucket: u64,
    /// Interval-level backlog recursion bound.
    pub interval_bound: u64,
    /// Per-slot backlog growth above `bound * (|S| + 1)`.
    pub growth: u64,
    /// Fairness scalar outside `[1, K]`.
    pub k_range: u64,
    /// Allocation above its per-commodity cap or above the link budget.
    pub cap: u64,
    /// Arrival sample above the bound.
    pub arrival_bound: u64,
}

impl InvariantReport {
    pub fn violations(&self) -> u64 {
        self.conservation
            + self.capacity
            + self.token_bucket
            + self.interval_bound
            + self.growth
            + self.k_range
            + self.cap
            + self.arrival_bound
    }

    pub fn is_clean(&self) -> bool {
        self.violations() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueAverage {
    pub switch: SwitchId,
    pub commodity: CommodityId,
    pub mean: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub arrived: u64,
    pub departed: u64,
    pub backlog: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub config_digest: String,
    pub horizon: u64,
    pub interval: u64,
    pub k_max: f64,
    /// Averaging window `[start, end)` in slots.
    pub window: [u64; 2],
    pub queues: Vec<QueueAverage>,
    pub mean_backlog_per_queue: f64,
    /// Fraction of (link, interval) pairs in the window with `k = K`.
    pub k_saturation: Option<f64>,
    /// Same over the whole run.
    pub k_saturation_all: Option<f64>,
    pub k_max_observed: Option<f64>,
    pub convergence_slot: Option<u64>,
    pub totals: Totals,
    pub invariants: InvariantReport,
}

impl MetricsReport {
    pub fn queue_mean(&self, switch: impl Into<SwitchId>, commodity: impl Into<CommodityId>) -> Option<f64> {
        let (i, d) = (switch.into(), commodity.into());
        self.queues
            .iter()
            .find(|q| q.switch == i && q.commodity == d)
            .map(|q| q.mean)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }
}

/// Block length used by the convergence detector.
pub(crate) fn convergence_block(horizon: u64, interval: u64) -> u64 {
    interval.max(horizon / 100).max(1)
}

/// Blocks per sliding window in the convergence detector.
pub(crate) const CONVERGENCE_SPAN: usize = 20;

/// Start of the first sliding window (twenty blocks long, advanced one block at
/// a time) after which the window mean of total backlog changes by less than
/// 1% per step for the rest of the run.
pub(crate) fn convergence_slot(total_backlog: &[u64], block: u64) -> Option<u64> {
    let sums: Vec<u64> = total_backlog
        .chunks_exact(block as usize)
        .map(|c| c.iter().sum::<u64>())
        .collect();
    if sums.len() < CONVERGENCE_SPAN + 2 {
        return None;
    }
    let span = CONVERGENCE_SPAN as f64 * block as f64;
    let means: Vec<f64> = sums
        .windows(CONVERGENCE_SPAN)
        .map(|w| w.iter().sum::<u64>() as f64 / span)
        .collect();
    // below 100 packets in total, a change under one packet also counts as steady
    let steady = |b: usize| (means[b + 1] - means[b]).abs() < (0.01 * means[b]).max(1.0);
    let mut start = None;
    for b in (0..means.len() - 1).rev() {
        if steady(b) {
            start = Some(b);
        } else {
            break;
        }
    }
    start.map(|b| b as u64 * block)
}

pub(crate) struct KStats {
    pub saturation: Option<f64>,
    pub saturation_all: Option<f64>,
    pub max_observed: Option<f64>,
}

pub(crate) fn k_stats(records: &[KRecord], window: [u64; 2]) -> KStats {
    let frac = |rs: &mut dyn Iterator<Item = &KRecord>| {
        let (mut n, mut sat) = (0u64, 0u64);
        for r in rs.filter(|r| r.k.is_some()) {
            n += 1;
            sat += r.saturated as u64;
        }
        (n > 0).then(|| sat as f64 / n as f64)
    };
    KStats {
        saturation: frac(&mut records.iter().filter(|r| r.slot >= window[0] && r.slot < window[1])),
        saturation_all: frac(&mut records.iter()),
        max_observed: records.iter().filter_map(|r| r.k).reduce(f64::max),
    }
}

pub(crate) struct WindowSums<'a> {
    pub queues: &'a [(SwitchId, CommodityId)],
    pub sums: &'a [u128],
    pub samples: u64,
}

pub(crate) fn build_report(
    config: &ScenarioConfig,
    window: [u64; 2],
    sums: WindowSums<'_>,
    trace: &SlotTrace,
    totals: Totals,
) -> MetricsReport {
    let queues: Vec<QueueAverage> = sums
        .queues
        .iter()
        .zip(sums.sums)
        .map(|(&(i, d), &s)| QueueAverage {
            switch: i,
            commodity: d,
            mean: if sums.samples == 0 { 0.0 } else { s as f64 / sums.samples as f64 },
        })
        .collect();
    let mean_backlog_per_queue = if queues.is_empty() || sums.samples == 0 {
        0.0
    } else {
        sums.sums.iter().sum::<u128>() as f64 / (sums.samples as f64 * queues.len() as f64)
    };
    let ks = k_stats(&trace.k_records, window);
    let block = convergence_block(config.horizon, config.interval);
    MetricsReport {
        scenario: config.name.clone(),
        algorithm: config.algorithm,
        seed: config.seed,
        config_digest: config.digest(),
        horizon: config.horizon,
        interval: config.interval,
        k_max: config.k_max,
        window,
        queues,
        mean_backlog_per_queue,
        k_saturation: ks.saturation,
        k_saturation_all: ks.saturation_all,
        k_max_observed: ks.max_observed,
        convergence_slot: convergence_slot(&trace.total_backlog, block),
        totals,
        invariants: InvariantReport::default(),
    }
}

/// Recomputes a report from the records kept in `trace`. With a full trace
/// this matches the report produced by the run itself (minus the invariant
/// counters, which are not stored in traces).
pub fn collect_metrics(
    config: &ScenarioConfig,
    trace: &SlotTrace,
    window: [u64; 2],
) -> Result<MetricsReport, SimError> {
    if window[0] >= window[1] || window[1] > trace.horizon {
        return Err(SimError::EmptyWindow(window[0], window[1]));
    }
    let mut sums = vec![0u128; trace.queues.len()];
    let mut samples = 0;
    for r in trace
        .records
        .iter()
        .filter(|r| r.slot >= window[0] && r.slot < window[1])
    {
        samples += 1;
        for (s, &q) in sums.iter_mut().zip(&r.queues) {
            *s += q as u128;
        }
    }
    if samples == 0 {
        return Err(SimError::EmptyWindow(window[0], window[1]));
    }
    let totals = match trace.records.last() {
        Some(last) => {
            let mut arrived: u64 = last.cum_arrivals.iter().sum();
            let mut departed: u64 = last.cum_departures.iter().sum();
            arrived += last.arrivals.iter().sum::<u64>();
            departed += last.departures.iter().sum::<u64>();
            Totals {
                arrived,
                departed,
                backlog: arrived - departed,
            }
        }
        None => Totals::default(),
    };
    Ok(build_report(
        config,
        window,
        WindowSums {
            queues: &trace.queues,
            sums: &sums,
            samples,
        },
        trace,
        totals,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_backlog_converges_at_zero() {
        assert_eq!(convergence_slot(&[7; 3000], 100), Some(0));
    }

    #[test]
    fn ramp_then_flat() {
        let mut xs: Vec<u64> = (0..1000).map(|t| 1000 - t).collect();
        xs.extend(std::iter::repeat_n(0, 3000));
        // windows starting at or after slot 1000 see only the flat part
        assert_eq!(convergence_slot(&xs, 100), Some(1000));
    }

    #[test]
    fn growing_never_converges() {
        let xs: Vec<u64> = (0..3000).map(|t| t * t).collect();
        assert_eq!(convergence_slot(&xs, 100), None);
    }

    #[test]
    fn short_runs_have_no_estimate() {
        assert_eq!(convergence_slot(&[7; 1000], 100), None);
    }

    #[test]
    fn saturation_fraction() {
        let rec = |slot, k: Option<f64>, saturated| KRecord {
            slot,
            from: SwitchId(1),
            to: SwitchId(2),
            k,
            saturated,
        };
        let rs = vec![
            rec(0, Some(1.0), false),
            rec(100, Some(10.0), true),
            rec(200, Some(10.0), true),
            rec(300, Some(2.0), false),
        ];
        let s = k_stats(&rs, [100, 400]);
        assert_eq!(s.saturation, Some(2.0 / 3.0));
        assert_eq!(s.saturation_all, Some(0.5));
        assert_eq!(s.max_observed, Some(10.0));
        let none = k_stats(&[rec(0, None, false)], [0, 10]);
        assert_eq!(none.saturation, None);
    }
}
