use netlb::network::{load_scenario, Algorithm};
use netlb::scenarios::{config, line_network, toy_line};
use netlb::sim::*;
use proptest::prelude::*;

fn fig_one_state(sim: &mut Simulator) {
    // weights 0, 1 on link (1,2) and 3, 1 on link (2,3)
    for (i, d, q) in [(1, 1, 3), (1, 2, 2), (2, 1, 3), (2, 2, 1)] {
        sim.set_queue(i, d, q);
    }
}

#[test]
fn maxweight_picks_the_heavier_commodity_per_link() {
    let cfg = config(toy_line(Algorithm::Maxweight, 1, 10));
    let mut sim = Simulator::new(&cfg, RunOptions::default()).unwrap();
    fig_one_state(&mut sim);
    sim.reconfigure().unwrap();
    let st = sim.state();
    assert_eq!((st.interval_alloc(1, 2, 1), st.interval_alloc(1, 2, 2)), (0, 3));
    assert_eq!((st.interval_alloc(2, 3, 1), st.interval_alloc(2, 3, 2)), (3, 0));
    assert_eq!((st.interval_alloc(3, 4, 1), st.interval_alloc(3, 4, 2)), (0, 0));
}

#[test]
fn sharing_splits_where_maxweight_would_not() {
    let cfg = config(toy_line(Algorithm::Algorithm1, 1, 10));
    let mut sim = Simulator::new(&cfg, RunOptions::default()).unwrap();
    fig_one_state(&mut sim);
    sim.reconfigure().unwrap();
    let st = sim.state();
    assert_eq!(st.interval_alloc(1, 2, 2), 1);
    assert_eq!(st.interval_alloc(2, 3, 1) + st.interval_alloc(2, 3, 2), 3);
    assert!(st.interval_alloc(2, 3, 2) > 0);
}

#[test]
fn empty_network_allocates_nothing() {
    for alg in [Algorithm::Algorithm1, Algorithm::Maxweight] {
        let cfg = config(line_network(alg, 100));
        let mut sim = Simulator::new(&cfg, RunOptions::default()).unwrap();
        sim.reconfigure().unwrap();
        let st = sim.state();
        for (i, j) in [(1, 2), (2, 3), (3, 4)] {
            for d in [1, 2] {
                assert_eq!(st.interval_alloc(i, j, d), 0);
                assert_eq!(st.tokens(i, j, d), 0);
            }
        }
    }
}

const QUIET: &str = r#"{
    "version": 1, "name": "quiet",
    "topology": {
        "switches": [1, 2, 3], "commodities": [3],
        "links": [{"from": 1, "to": 2, "capacity": 2}, {"from": 2, "to": 3, "capacity": 2}],
        "sinks": [{"switch": 3, "commodity": 3, "capacity": 2}],
        "next_hops": [{"switch": 1, "commodity": 3, "via": [2]}, {"switch": 2, "commodity": 3, "via": [3]}]
    },
    "run": {"interval": 10, "horizon": 100}
}"#;

#[test]
fn no_tokens_no_arrivals_only_advances_the_clock() {
    let cfg = load_scenario(QUIET).unwrap();
    let mut sim = Simulator::new(&cfg, RunOptions::default()).unwrap();
    sim.set_queue(1, 3, 7);
    // no reconfiguration yet, so every bucket is empty
    for t in 0..5 {
        assert_eq!(sim.state().clock, t);
        sim.step_slot();
        assert_eq!(sim.state().queue(1, 3), 7);
        assert_eq!(sim.state().queue(2, 3), 0);
    }
    assert_eq!(sim.state().clock, 5);
}

#[test]
fn zero_horizon_runs_cleanly() {
    let cfg = load_scenario(&QUIET.replace("\"horizon\": 100", "\"horizon\": 0")).unwrap();
    let (report, trace) = run_with(
        &cfg,
        RunOptions {
            trace: TraceLevel::Full,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(trace.records.is_empty());
    assert_eq!(report.totals.arrived, 0);
    assert!(report.invariants.is_clean());
}

#[test]
fn backlog_drains_through_the_pipe() {
    let cfg = load_scenario(QUIET).unwrap();
    let mut sim = Simulator::new(&cfg, RunOptions::default()).unwrap();
    sim.set_queue(1, 3, 20);
    let (report, _) = sim.finish().unwrap();
    assert_eq!(report.totals.backlog, 0);
    assert_eq!(report.totals.departed, 20);
    assert!(report.invariants.is_clean());
}

fn full(alg: Algorithm, interval: u64) -> (MetricsReport, SlotTrace, netlb::network::ScenarioConfig) {
    let mut doc = line_network(alg, interval);
    doc.run.horizon = 20 * interval;
    let cfg = config(doc);
    let (r, t) = run_with(
        &cfg,
        RunOptions {
            trace: TraceLevel::Full,
            ..Default::default()
        },
    )
    .unwrap();
    (r, t, cfg)
}

#[test]
fn report_is_reproducible_from_a_full_trace() {
    for alg in [Algorithm::Algorithm1, Algorithm::Maxweight] {
        let (report, trace, cfg) = full(alg, 10);
        assert!(report.invariants.is_clean(), "{:?}", report.invariants);
        assert!(trace.conservation_holds());
        let mut again = collect_metrics(&cfg, &trace, report.window).unwrap();
        again.invariants = report.invariants;
        assert_eq!(again, report);
    }
}

#[test]
fn decimated_trace_keeps_every_nth_slot() {
    let mut doc = line_network(Algorithm::Algorithm1, 10);
    doc.run.horizon = 1000;
    let cfg = config(doc);
    let (_, t) = run_with(
        &cfg,
        RunOptions {
            trace: TraceLevel::Decimated(50),
            ..Default::default()
        },
    )
    .unwrap();
    let slots: Vec<u64> = t.records.iter().map(|r| r.slot).collect();
    assert_eq!(slots, (0..1000).step_by(50).collect::<Vec<_>>());
    assert_eq!(t.total_backlog.len(), 1000);
    assert!(t.conservation_holds());
}

#[test]
fn binary_trace_round_trips() {
    let (_, trace, cfg) = full(Algorithm::Algorithm1, 10);
    let digest = cfg.digest();
    let mut bytes = Vec::new();
    write_binary_trace(&trace, &digest, &mut bytes).unwrap();
    assert_eq!(&bytes[..4], BINARY_MAGIC);
    let back = read_binary_trace(bytes.as_slice()).unwrap();
    assert_eq!(back.digest, digest);
    assert_eq!(back.stride, 1);
    assert_eq!(back.queues, trace.queues);
    assert_eq!(back.rows.len(), trace.records.len());
    for (row, r) in back.rows.iter().zip(&trace.records) {
        assert_eq!(row.0, r.slot);
        assert_eq!(row.1, r.queues);
    }
    assert!(read_binary_trace(&bytes[..bytes.len() - 1]).is_err());
    assert!(write_binary_trace(&trace, "abc", Vec::new()).is_err());
}

#[test]
fn csv_trace_matches_records() {
    let (_, trace, _) = full(Algorithm::Maxweight, 10);
    let mut bytes = Vec::new();
    write_trace_csv(&trace, &mut bytes).unwrap();
    let mut rd = csv::Reader::from_reader(bytes.as_slice());
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), trace.records.len() * trace.queues.len());
    let first = &rows[trace.queues.len()];
    let (i, d) = trace.queues[0];
    assert_eq!(first[0].parse::<u64>().unwrap(), trace.records[1].slot);
    assert_eq!(first[1].parse::<u32>().unwrap(), i.0);
    assert_eq!(first[2].parse::<u32>().unwrap(), d.0);
    assert_eq!(first[3].parse::<u64>().unwrap(), trace.records[1].queues[0]);
}

#[test]
fn runs_are_deterministic_per_seed() {
    let (a, ta, _) = full(Algorithm::Algorithm1, 10);
    let (b, tb, _) = full(Algorithm::Algorithm1, 10);
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(ta.records, tb.records);

    let mut doc = line_network(Algorithm::Algorithm1, 10);
    doc.run.horizon = 200;
    doc.run.seed += 1;
    let (c, _) = run(&config(doc)).unwrap();
    assert_ne!(c.totals.arrived, a.totals.arrived);
}

#[test]
fn report_json_round_trips() {
    let (r, _, _) = full(Algorithm::Algorithm1, 10);
    let back: MetricsReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn bad_window_is_an_error() {
    let (r, t, cfg) = full(Algorithm::Algorithm1, 10);
    assert!(collect_metrics(&cfg, &t, [5, 5]).is_err());
    assert!(collect_metrics(&cfg, &t, [0, r.horizon + 1]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Service never exceeds tokens, capacity or backlog, and the
    /// token budget stays feasible for the slots that remain.
    #[test]
    fn schedule_respects_every_limit(
        tokens in prop::collection::vec(0u64..40, 1..5),
        capacity in 1u64..6,
        backlog in prop::collection::vec(0u64..20, 5),
    ) {
        let remaining = tokens.iter().sum::<u64>().div_ceil(capacity).max(1);
        let backlog = &backlog[..tokens.len()];
        let s = data_plane_schedule(&tokens, backlog, capacity, remaining);
        prop_assert!(s.iter().sum::<u64>() <= capacity);
        for d in 0..tokens.len() {
            prop_assert!(s[d] <= tokens[d] && s[d] <= backlog[d]);
        }
        let targets = schedule_targets(&tokens, capacity, remaining);
        let mut left = tokens.clone();
        settle_tokens(&mut left, &targets, &s, capacity, remaining);
        prop_assert!(left.iter().sum::<u64>() <= (remaining - 1) * capacity);
    }

    #[test]
    fn random_runs_keep_the_invariants(
        seed in any::<u64>(),
        interval in prop::sample::select(vec![1u64, 5, 10, 25]),
        alg in prop::sample::select(vec![Algorithm::Algorithm1, Algorithm::Maxweight]),
    ) {
        let mut doc = line_network(alg, interval);
        doc.run.horizon = 20 * interval.max(10);
        doc.run.seed = seed;
        let (r, t) = run_with(&config(doc), RunOptions { trace: TraceLevel::Full, ..Default::default() }).unwrap();
        prop_assert!(r.invariants.is_clean(), "{:?}", r.invariants);
        prop_assert!(t.conservation_holds());
        prop_assert_eq!(r.totals.arrived, r.totals.departed + r.totals.backlog);
    }
}
