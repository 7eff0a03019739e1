use std::fmt;
use std::io::Write;
use std::path::Path;

use netlb::alloc::{
    allocate_rates, brute_force_optimum, explain_allocation, k_from_f64, maxweight_allocate, Demand, KFactor,
    LinkAllocState,
};
use netlb::heuristic::{run_flow_sim, write_fct_csv};
use netlb::network::{load_scenario_file, Algorithm, ScenarioConfig, ScenarioDoc};
use netlb::sim::{run_with, write_binary_trace, write_trace_csv, RunOptions, SlotTrace, TraceLevel, WindowChoice};
use netlb::{ConfigError, SimError};
use rayon::prelude::*;

use crate::output::{OutDir, RunManifest};
use crate::table::{ComparisonTable, Outcome};
use crate::{AllocArgs, Common};

/// Bad flag values and combinations clap cannot catch.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn with_doc(cfg: &ScenarioConfig, edit: impl FnOnce(&mut ScenarioDoc)) -> Result<ScenarioConfig, ConfigError> {
    let mut doc = cfg.to_doc();
    edit(&mut doc);
    doc.into_config()
}

fn execute(cfg: &ScenarioConfig, trace: TraceLevel, window: WindowChoice) -> Result<(Outcome, SlotTrace), SimError> {
    if cfg.algorithm.is_flow_level() {
        return Ok((Outcome::Flow(run_flow_sim(cfg)?), SlotTrace::default()));
    }
    let (report, t) = run_with(cfg, RunOptions { trace, window })?;
    Ok((Outcome::Slotted(report), t))
}

fn write_k_csv<W: Write>(trace: &SlotTrace, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "from", "to", "k", "saturated"])?;
    for r in &trace.k_records {
        w.write_record([
            r.slot.to_string(),
            r.from.0.to_string(),
            r.to.0.to_string(),
            r.k.map(|k| k.to_string()).unwrap_or_default(),
            (r.saturated as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Metrics JSON plus the FCT table for flow runs.
fn write_outcome(out: &mut OutDir, prefix: &str, outcome: &Outcome) -> anyhow::Result<()> {
    match outcome {
        Outcome::Slotted(r) => {
            out.write_str(&format!("{prefix}metrics.json"), &r.to_json())?;
        }
        Outcome::Flow(r) => {
            out.write_str(&format!("{prefix}metrics.json"), &r.to_json())?;
            out.write_with(&format!("{prefix}fct.csv"), |w| Ok(write_fct_csv(&r.flows, w)?))?;
        }
    }
    Ok(())
}

pub fn run(common: &Common, seed: Option<u64>, algorithm: Option<Algorithm>, trace: TraceLevel) -> anyhow::Result<()> {
    let base = load_scenario_file(&common.config)?;
    let cfg = with_doc(&base, |d| {
        if let Some(s) = seed {
            d.run.seed = s;
        }
        if let Some(a) = algorithm {
            d.run.algorithm = a;
        }
    })?;
    let digest = cfg.digest();
    let mut manifest = RunManifest::new("run", &cfg.name, &common.config, digest.clone());
    manifest.algorithms = vec![cfg.algorithm];
    manifest.seeds = vec![cfg.seed];
    manifest.trace = Some(trace.to_string());

    let (outcome, slots) = execute(&cfg, trace, common.window.into())?;
    let mut out = OutDir::create(&common.out)?;
    manifest.config = out.write_str("config.json", &(cfg.to_json() + "\n"))?;
    write_outcome(&mut out, "", &outcome)?;
    if trace != TraceLevel::None && !cfg.algorithm.is_flow_level() {
        out.write_with("trace.csv", |w| Ok(write_trace_csv(&slots, w)?))?;
        out.write_with("trace.bin", |w| Ok(write_binary_trace(&slots, &digest, w)?))?;
        out.write_with("k.csv", |w| Ok(write_k_csv(&slots, w)?))?;
    }
    match &outcome {
        Outcome::Slotted(r) => println!(
            "{} {} seed {}: mean backlog/queue {:.3}, k saturation {}, invariant violations {}",
            r.scenario,
            r.algorithm,
            r.seed,
            r.mean_backlog_per_queue,
            r.k_saturation.map_or("-".into(), |x| format!("{:.2}%", 100.0 * x)),
            r.invariants.violations()
        ),
        Outcome::Flow(r) => {
            let s = &r.summary;
            println!(
                "{} {} seed {}: {}/{} flows done, mean FCT {}, drops {}",
                s.scenario,
                s.algorithm,
                s.seed,
                s.completed,
                s.flows,
                s.fct_mean.map_or("-".into(), |x| format!("{x:.2}")),
                s.drops
            );
        }
    }
    let path = out.finish(manifest)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn check_kinds(algorithms: &[Algorithm]) -> anyhow::Result<()> {
    let flow = algorithms.iter().filter(|a| a.is_flow_level()).count();
    if flow != 0 && flow != algorithms.len() {
        return Err(usage("cannot mix slotted (algorithm1, maxweight) and flow-level (heuristic, ecmp) algorithms"));
    }
    Ok(())
}

fn run_all(cfgs: &[ScenarioConfig], window: WindowChoice) -> anyhow::Result<Vec<Outcome>> {
    let runs: Result<Vec<Outcome>, SimError> = cfgs
        .par_iter()
        .map(|c| execute(c, TraceLevel::None, window).map(|(o, _)| o))
        .collect();
    Ok(runs?)
}

pub fn compare(common: &Common, algorithms: &[Algorithm], seeds: &[u64]) -> anyhow::Result<()> {
    if algorithms.len() < 2 {
        return Err(usage("compare needs at least two algorithms"));
    }
    if seeds.is_empty() {
        return Err(usage("compare needs at least one seed"));
    }
    check_kinds(algorithms)?;
    let base = load_scenario_file(&common.config)?;
    let mut cfgs = Vec::new();
    for &a in algorithms {
        for &s in seeds {
            cfgs.push(with_doc(&base, |d| {
                d.run.algorithm = a;
                d.run.seed = s;
            })?);
        }
    }
    let mut runs = run_all(&cfgs, common.window.into())?.into_iter();
    let mut grouped = Vec::new();
    for _ in algorithms {
        grouped.push(runs.by_ref().take(seeds.len()).collect::<Vec<_>>());
    }
    let table = ComparisonTable::build(&base.name, algorithms, seeds, &grouped)?;

    let mut manifest = RunManifest::new("compare", &base.name, &common.config, base.digest());
    manifest.algorithms = algorithms.to_vec();
    manifest.seeds = seeds.to_vec();
    let mut out = OutDir::create(&common.out)?;
    manifest.config = out.write_str("config.json", &(base.to_json() + "\n"))?;
    out.write_with("compare.csv", |w| Ok(table.write_csv(w)?))?;
    out.write_str("compare.json", &(serde_json::to_string_pretty(&table)? + "\n"))?;
    for (a, col) in algorithms.iter().zip(&grouped) {
        for (s, run) in seeds.iter().zip(col) {
            write_outcome(&mut out, &format!("runs/{a}_seed{s}_"), run)?;
        }
    }
    print!("{}", table.render());
    let path = out.finish(manifest)?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Param {
    Interval,
    KMax,
    ArrivalScale,
    Alpha,
}

impl Param {
    fn parse(s: &str) -> anyhow::Result<Self> {
        match s {
            "T" | "interval" => Ok(Param::Interval),
            "K" | "k_max" => Ok(Param::KMax),
            "arrival_scale" | "scale" => Ok(Param::ArrivalScale),
            "alpha" => Ok(Param::Alpha),
            other => Err(usage(format!("unknown sweep parameter `{other}` (T, K, arrival_scale, alpha)"))),
        }
    }

    fn apply(self, doc: &mut ScenarioDoc, v: f64) {
        match self {
            Param::Interval => doc.run.interval = v as u64,
            Param::KMax => doc.run.k_max = v,
            Param::ArrivalScale => doc.arrivals.scale = v,
            Param::Alpha => doc.run.alpha = v,
        }
    }
}

pub fn sweep(
    common: &Common,
    param: &str,
    values: &[String],
    algorithms: &[Algorithm],
    seeds: &[u64],
) -> anyhow::Result<()> {
    let p = Param::parse(param)?;
    if values.is_empty() || values.iter().any(|v| v.trim().is_empty()) {
        return Err(usage("--values needs at least one value"));
    }
    if seeds.is_empty() {
        return Err(usage("sweep needs at least one seed"));
    }
    let parsed: Vec<f64> = values
        .iter()
        .map(|v| {
            let x: f64 = v.trim().parse().map_err(|_| usage(format!("`{v}` is not a number")))?;
            if p == Param::Interval && (x < 1.0 || x.fract() != 0.0) {
                return Err(usage(format!("T must be a positive integer, got `{v}`")));
            }
            Ok(x)
        })
        .collect::<anyhow::Result<_>>()?;
    let base = load_scenario_file(&common.config)?;
    let algs = if algorithms.is_empty() {
        vec![base.algorithm]
    } else {
        algorithms.to_vec()
    };
    check_kinds(&algs)?;

    let mut jobs = Vec::new();
    let mut cfgs = Vec::new();
    for (v, &x) in values.iter().zip(&parsed) {
        for &a in &algs {
            for &s in seeds {
                cfgs.push(with_doc(&base, |d| {
                    p.apply(d, x);
                    d.run.algorithm = a;
                    d.run.seed = s;
                })?);
                jobs.push((v.trim(), a, s));
            }
        }
    }
    let runs = run_all(&cfgs, common.window.into())?;

    let mut manifest = RunManifest::new("sweep", &base.name, &common.config, base.digest());
    manifest.algorithms = algs.clone();
    manifest.seeds = seeds.to_vec();
    manifest.sweep = Some((param.to_string(), values.iter().map(|v| v.trim().to_string()).collect()));
    let mut out = OutDir::create(&common.out)?;
    manifest.config = out.write_str("config.json", &(base.to_json() + "\n"))?;
    out.write_with("sweep.csv", |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["param", "value", "algorithm", "seed", "metric", "switch", "commodity", "result"])?;
        for ((v, a, s), run) in jobs.iter().zip(&runs) {
            for m in run.metrics() {
                w.write_record([
                    param,
                    v,
                    a.name(),
                    &s.to_string(),
                    m.name,
                    &m.switch.map(|x| x.to_string()).unwrap_or_default(),
                    &m.commodity.map(|x| x.to_string()).unwrap_or_default(),
                    &m.value.map(|x| x.to_string()).unwrap_or_default(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    })?;
    println!("{} runs over {param} = {}", runs.len(), values.join(", "));
    let path = out.finish(manifest)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn validate(path: &Path) -> anyhow::Result<()> {
    match load_scenario_file(path) {
        Ok(cfg) => {
            let t = &cfg.topology;
            println!(
                "{}: ok ({} switches, {} commodities, {} links, {} live queues, digest {})",
                path.display(),
                t.switches.len(),
                t.destinations.len(),
                t.link_capacity.len(),
                t.live_queues().len(),
                &cfg.digest()[..16]
            );
            Ok(())
        }
        Err(ConfigError::Topology(v)) => {
            for x in &v {
                println!("{}: {x}", path.display());
            }
            Err(ConfigError::Topology(v).into())
        }
        Err(e) => Err(e.into()),
    }
}

fn parse_demand(s: &str) -> anyhow::Result<Demand> {
    let bad = || usage(format!("bad demand `{s}` (want commodity:q_local:q_next[:prev])"));
    let parts: Vec<u64> = s
        .split(':')
        .map(|p| p.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    match parts[..] {
        [d, ql, qn] => Ok(Demand::new(d as u32, ql, qn, 0)),
        [d, ql, qn, z] => Ok(Demand::new(d as u32, ql, qn, z)),
        _ => Err(bad()),
    }
}

pub fn alloc_debug(a: &AllocArgs) -> anyhow::Result<()> {
    let demands = a.demands.iter().map(|s| parse_demand(s)).collect::<anyhow::Result<Vec<_>>>()?;
    let k_max = k_from_f64(a.k_max).map_err(|e| usage(e.to_string()))?;
    let state = LinkAllocState::new(demands, a.budget, k_max).map_err(|e| usage(e.to_string()))?;
    let alloc = match a.algorithm {
        Algorithm::Algorithm1 => allocate_rates(&state),
        Algorithm::Maxweight => maxweight_allocate(&state),
        other => return Err(usage(format!("{other} is not a per-link allocator"))),
    };
    if a.json {
        println!("{}", serde_json::to_string_pretty(&alloc)?);
    } else if a.algorithm == Algorithm::Algorithm1 {
        print!("{}", explain_allocation(&state));
    } else {
        for (d, r) in &alloc.rates {
            println!("x[{d}] = {r}");
        }
        println!("objective = {}", alloc.objective);
    }
    if a.oracle {
        let k = alloc.k_used.unwrap_or(KFactor::from_integer(1));
        let best = brute_force_optimum(&state, k).map_err(|e| usage(e.to_string()))?;
        println!("oracle: objective = {} rates = {:?}", best.objective_f64, best.rates);
        if a.algorithm == Algorithm::Algorithm1 {
            let same = netlb::alloc::objective_exact(&state, &alloc.values(), k) == best.objective;
            println!("oracle agrees: {same}");
        }
    }
    Ok(())
}
