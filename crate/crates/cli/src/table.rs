use std::fmt::Write as _;
use std::io::Write;

use netlb::heuristic::FlowSimReport;
use netlb::network::Algorithm;
use netlb::sim::MetricsReport;
use serde::Serialize;

/// Result of one (algorithm, seed) run.
pub enum Outcome {
    Slotted(MetricsReport),
    Flow(FlowSimReport),
}

/// One scalar read off a run. Per-queue backlogs carry their queue.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub name: &'static str,
    pub switch: Option<u32>,
    pub commodity: Option<u32>,
    pub value: Option<f64>,
}

fn scalar(name: &'static str, value: Option<f64>) -> Metric {
    Metric {
        name,
        switch: None,
        commodity: None,
        value,
    }
}

impl Outcome {
    pub fn metrics(&self) -> Vec<Metric> {
        match self {
            Outcome::Slotted(r) => {
                let mut m: Vec<Metric> = r
                    .queues
                    .iter()
                    .map(|q| Metric {
                        name: "backlog",
                        switch: Some(q.switch.0),
                        commodity: Some(q.commodity.0),
                        value: Some(q.mean),
                    })
                    .collect();
                m.push(scalar("mean_backlog_per_queue", Some(r.mean_backlog_per_queue)));
                m.push(scalar("k_saturation", r.k_saturation));
                m.push(scalar("k_max_observed", r.k_max_observed));
                m.push(scalar("convergence_slot", r.convergence_slot.map(|s| s as f64)));
                m
            }
            Outcome::Flow(r) => {
                let s = &r.summary;
                vec![
                    scalar("fct_mean", s.fct_mean),
                    scalar("fct_variance", s.fct_variance),
                    scalar("fct_p99", s.fct_p99.map(|x| x as f64)),
                    scalar("completed", Some(s.completed as f64)),
                    scalar("drops", Some(s.drops as f64)),
                    scalar("remapped_flows", Some(s.remapped_flows as f64)),
                ]
            }
        }
    }
}

/// Mean and standard error over seeds; missing values are skipped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    pub n: usize,
}

pub fn stat(xs: &[f64]) -> Stat {
    let n = xs.len();
    if n == 0 {
        return Stat {
            mean: None,
            stderr: None,
            n,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Stat {
        mean: Some(mean),
        stderr: Some(stderr),
        n,
    }
}

#[derive(Debug, Serialize)]
pub struct Row {
    pub metric: &'static str,
    pub switch: Option<u32>,
    pub commodity: Option<u32>,
    /// One entry per column, in column order.
    pub values: Vec<Stat>,
}

#[derive(Debug, Serialize)]
pub struct ComparisonTable {
    pub scenario: String,
    pub columns: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    pub rows: Vec<Row>,
}

impl ComparisonTable {
    /// `runs[c][s]` is the run of column `c` with seed `s`.
    pub fn build(scenario: &str, columns: &[Algorithm], seeds: &[u64], runs: &[Vec<Outcome>]) -> anyhow::Result<Self> {
        let layout: Vec<Vec<Metric>> = runs.iter().flatten().map(Outcome::metrics).collect();
        let first = &layout[0];
        let key = |m: &Metric| (m.name, m.switch, m.commodity);
        for other in &layout[1..] {
            if other.len() != first.len() || other.iter().zip(first).any(|(a, b)| key(a) != key(b)) {
                anyhow::bail!("runs do not share a topology; cannot tabulate");
            }
        }
        let per_col = seeds.len();
        let rows = first
            .iter()
            .enumerate()
            .map(|(r, m)| Row {
                metric: m.name,
                switch: m.switch,
                commodity: m.commodity,
                values: (0..columns.len())
                    .map(|c| {
                        let xs: Vec<f64> = layout[c * per_col..(c + 1) * per_col]
                            .iter()
                            .filter_map(|run| run[r].value)
                            .collect();
                        stat(&xs)
                    })
                    .collect(),
            })
            .collect();
        Ok(ComparisonTable {
            scenario: scenario.to_string(),
            columns: columns.to_vec(),
            seeds: seeds.to_vec(),
            rows,
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["metric".to_string(), "switch".into(), "commodity".into()];
        for a in &self.columns {
            header.push(format!("{a}_mean"));
            header.push(format!("{a}_stderr"));
        }
        w.write_record(&header)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let mut rec = vec![
                r.metric.to_string(),
                r.switch.map(|x| x.to_string()).unwrap_or_default(),
                r.commodity.map(|x| x.to_string()).unwrap_or_default(),
            ];
            for v in &r.values {
                rec.push(opt(v.mean));
                rec.push(opt(v.stderr));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Fixed-width text rendering for the terminal.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:<24}{:>7}{:>10}", "metric", "switch", "commodity");
        for a in &self.columns {
            let _ = write!(s, "{:>26}", a.name());
        }
        s.push('\n');
        for r in &self.rows {
            let opt = |v: Option<u32>| v.map(|x| x.to_string()).unwrap_or_else(|| "-".into());
            let _ = write!(s, "{:<24}{:>7}{:>10}", r.metric, opt(r.switch), opt(r.commodity));
            for v in &r.values {
                let cell = match (v.mean, v.stderr) {
                    (Some(m), Some(e)) => format!("{m:.3} ± {e:.3}"),
                    _ => "-".into(),
                };
                let _ = write!(s, "{cell:>26}");
            }
            s.push('\n');
        }
        s
    }
}
