/// Deficit round robin over the commodity queues of one port, with quanta
/// proportional to the WFQ weights (smallest quantum one packet).
#[derive(Debug, Clone, PartialEq)]
pub struct DrrScheduler {
    quanta: Vec<f64>,
    deficit: Vec<f64>,
    cursor: usize,
    fresh: bool,
}

impl DrrScheduler {
    pub fn new(n: usize) -> Self {
        DrrScheduler {
            quanta: vec![1.0; n],
            deficit: vec![0.0; n],
            cursor: 0,
            fresh: true,
        }
    }

    pub fn len(&self) -> usize {
        self.quanta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quanta.is_empty()
    }

    pub fn set_weights(&mut self, weights: &[f64]) {
        assert_eq!(weights.len(), self.quanta.len());
        let min = weights.iter().copied().filter(|w| *w > 0.0).fold(f64::INFINITY, f64::min);
        for (q, &w) in self.quanta.iter_mut().zip(weights) {
            *q = if min.is_finite() && w > 0.0 { w / min } else { 1.0 };
        }
    }

    /// Picks up to `budget` packets given the per-commodity `backlog`;
    /// `out[d]` receives the count taken from queue `d`.
    pub fn serve(&mut self, backlog: &[u64], budget: u64, out: &mut [u64]) {
        let n = self.quanta.len();
        out.iter_mut().for_each(|x| *x = 0);
        let mut waiting: u64 = backlog.iter().sum();
        let mut left = budget;
        while left > 0 && waiting > 0 {
            let d = self.cursor;
            let avail = backlog[d] - out[d];
            if avail == 0 {
                self.deficit[d] = 0.0;
                self.advance(n);
                continue;
            }
            if self.fresh {
                self.deficit[d] += self.quanta[d];
                self.fresh = false;
            }
            let k = (self.deficit[d].floor() as u64).min(avail).min(left);
            out[d] += k;
            self.deficit[d] -= k as f64;
            left -= k;
            waiting -= k;
            if backlog[d] == out[d] {
                self.deficit[d] = 0.0;
                self.advance(n);
            } else if self.deficit[d] < 1.0 {
                self.advance(n);
            }
        }
    }

    fn advance(&mut self, n: usize) {
        self.cursor = (self.cursor + 1) % n;
        self.fresh = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shares_follow_weights() {
        let mut drr = DrrScheduler::new(3);
        drr.set_weights(&[25.0, 75.0, 50.0]);
        let mut got = [0u64; 3];
        let mut out = [0u64; 3];
        for _ in 0..100 {
            drr.serve(&[1000, 1000, 1000], 6, &mut out);
            for d in 0..3 {
                got[d] += out[d];
            }
        }
        let total: u64 = got.iter().sum();
        assert_eq!(total, 600);
        for (g, w) in got.iter().zip([25.0, 75.0, 50.0]) {
            let share = *g as f64 / total as f64;
            assert!((share - w / 150.0).abs() < 0.05, "{got:?}");
        }
    }

    #[test]
    fn work_conserving() {
        let mut drr = DrrScheduler::new(2);
        drr.set_weights(&[1.0, 100.0]);
        let mut out = [0u64; 2];
        drr.serve(&[5, 0], 4, &mut out);
        assert_eq!(out, [4, 0]);
        drr.serve(&[1, 2], 10, &mut out);
        assert_eq!(out, [1, 2]);
        drr.serve(&[0, 0], 10, &mut out);
        assert_eq!(out, [0, 0]);
    }
}
