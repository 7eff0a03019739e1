use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SLOTTED: &str = r#"{
    "version": 1, "name": "pipe",
    "topology": {
        "switches": [1, 2, 3], "commodities": [3],
        "links": [{"from": 1, "to": 2, "capacity": 3}, {"from": 2, "to": 3, "capacity": 3}],
        "sinks": [{"switch": 3, "commodity": 3, "capacity": 3}],
        "next_hops": [{"switch": 1, "commodity": 3, "via": [2]}, {"switch": 2, "commodity": 3, "via": [3]}]
    },
    "arrivals": {"sources": [{"switch": 1, "commodity": 3, "law": {"kind": "uniform", "lo": 0, "hi": 4}}]},
    "run": {"interval": 10, "horizon": 2000, "algorithm": "algorithm1"}
}"#;

const FLOWS: &str = r#"{
    "version": 1, "name": "two_paths",
    "topology": {
        "switches": [1, 2, 3, 4], "commodities": [4],
        "links": [{"from": 1, "to": 2, "capacity": 2}, {"from": 1, "to": 3, "capacity": 2},
                  {"from": 2, "to": 4, "capacity": 2}, {"from": 3, "to": 4, "capacity": 2}],
        "sinks": [{"switch": 4, "commodity": 4, "capacity": 8}],
        "next_hops": [{"switch": 1, "commodity": 4, "via": [2, 3]},
                      {"switch": 2, "commodity": 4, "via": [4]},
                      {"switch": 3, "commodity": 4, "via": [4]}]
    },
    "run": {"interval": 10, "horizon": 2000, "algorithm": "heuristic", "queue_capacity": 50},
    "flows": {"groups": [{"source": 1, "commodity": 4, "count": 6, "size": 40}], "start_window": [0, 20]}
}"#;

fn netlb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netlb"))
        .args(args)
        .env_remove("NETLB_OUT_DIR")
        .output()
        .unwrap()
}

fn scenario(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_artifacts_and_is_repeatable() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario(tmp.path(), "pipe.json", SLOTTED);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = netlb(&["run", "--config", s(&cfg), "--out", s(out), "--seed", "7", "--trace", "full"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["metrics.json", "trace.csv", "trace.bin", "k.csv", "config.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    let metrics: serde_json::Value = serde_json::from_slice(&fs::read(a.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"][0], 7);
    assert_eq!(metrics["seed"], 7);
    assert_eq!(manifest["config_digest"], metrics["config_digest"]);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 5);

    let bin = netlb::sim::read_binary_trace(fs::File::open(a.join("trace.bin")).unwrap()).unwrap();
    assert_eq!(bin.digest, manifest["config_digest"].as_str().unwrap());
    assert_eq!(bin.rows.len(), 2000);
}

#[test]
fn manifest_config_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario(tmp.path(), "pipe.json", SLOTTED);
    let first = tmp.path().join("first");
    let o = netlb(&["run", "--config", s(&cfg), "--out", s(&first), "--seed", "3", "--algorithm", "maxweight"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let again = tmp.path().join("again");
    let o = netlb(&["run", "--config", s(&first.join("config.json")), "--out", s(&again)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(first.join("metrics.json")).unwrap(),
        fs::read(again.join("metrics.json")).unwrap()
    );
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = netlb(&["run", "--config", "/definitely/not/here.json", "--out", "/tmp"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/definitely/not/here.json"));
}

#[test]
fn unknown_flags_and_values_exit_2() {
    assert_eq!(netlb(&["run", "--bogus"]).status.code(), Some(2));
    assert_eq!(netlb(&["run", "--config", "x", "--trace", "some"]).status.code(), Some(2));
    assert_eq!(netlb(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(netlb(&["--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario(tmp.path(), "pipe.json", SLOTTED);
    let blocker = scenario(tmp.path(), "file", "");
    let o = netlb(&["run", "--config", s(&cfg), "--out", s(&blocker.join("sub"))]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn output_dir_defaults_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario(tmp.path(), "pipe.json", SLOTTED);
    let out = tmp.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_netlb"))
        .args(["run", "--config", s(&cfg)])
        .env("NETLB_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("metrics.json").exists());
}

#[test]
fn compare_of_one_algorithm_twice_has_equal_columns() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario(tmp.path(), "pipe.json", SLOTTED);
    let out = tmp.path().join("cmp");
    let o = netlb(&[
        "compare", "--config", s(&cfg), "--out", s(&out),
        "--algorithms", "algorithm1,algorithm1", "--seeds", "4",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rd = csv::Reader::from_path(out.join("compare.csv")).unwrap();
    assert_eq!(
        rd.headers().unwrap().iter().collect::<Vec<_>>(),
        ["metric", "switch", "commodity", "algorithm1_mean", "algorithm1_stderr", "algorithm1_mean", "algorithm1_stderr"]
    );
    for row in rd.records() {
        let row = row.unwrap();
        assert_eq!((&row[3], &row[4]), (&row[5], &row[6]));
    }
}

#[test]
fn compare_needs_two_algorithms_of_one_kind() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario(tmp.path(), "pipe.json", SLOTTED);
    let out = tmp.path().join("x");
    let one = netlb(&["compare", "--config", s(&cfg), "--out", s(&out), "--algorithms", "maxweight"]);
    assert_eq!(one.status.code(), Some(2));
    let mixed = netlb(&["compare", "--config", s(&cfg), "--out", s(&out), "--algorithms", "maxweight,ecmp"]);
    assert_eq!(mixed.status.code(), Some(2));
}

#[test]
fn flow_compare_tabulates_fct() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario(tmp.path(), "flows.json", FLOWS);
    let out = tmp.path().join("cmp");
    let o = netlb(&[
        "compare", "--config", s(&cfg), "--out", s(&out),
        "--algorithms", "heuristic,ecmp", "--seeds", "1,2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table: serde_json::Value = serde_json::from_slice(&fs::read(out.join("compare.json")).unwrap()).unwrap();
    let metrics: Vec<&str> = table["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["metric"].as_str().unwrap())
        .collect();
    assert!(metrics.contains(&"fct_mean") && metrics.contains(&"fct_variance") && metrics.contains(&"fct_p99"));
    assert!(out.join("runs/ecmp_seed2_fct.csv").exists());
}

#[test]
fn flow_run_writes_a_stable_fct_table() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario(tmp.path(), "flows.json", FLOWS);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = netlb(&["run", "--config", s(&cfg), "--out", s(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let fct = fs::read_to_string(a.join("fct.csv")).unwrap();
    assert!(fct.starts_with("flow_id,commodity,source,start,completion,fct,retransmits,path_digest\n"));
    assert_eq!(fct.lines().count(), 7);
    assert_eq!(fct, fs::read_to_string(b.join("fct.csv")).unwrap());
    assert_eq!(fs::read(a.join("metrics.json")).unwrap(), fs::read(b.join("metrics.json")).unwrap());
}

#[test]
fn sweep_emits_long_format_rows() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario(tmp.path(), "pipe.json", SLOTTED);
    let out = tmp.path().join("sw");
    let o = netlb(&[
        "sweep", "--config", s(&cfg), "--out", s(&out),
        "--param", "arrival_scale", "--values", "1.0,0.5", "--seeds", "1,2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rd = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    assert_eq!(
        rd.headers().unwrap().iter().collect::<Vec<_>>(),
        ["param", "value", "algorithm", "seed", "metric", "switch", "commodity", "result"]
    );
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    let backlog = |v: &str| -> f64 {
        rows.iter()
            .filter(|r| &r[1] == v && &r[4] == "mean_backlog_per_queue")
            .map(|r| r[7].parse::<f64>().unwrap())
            .sum()
    };
    assert!(backlog("0.5") < backlog("1.0"));
}

#[test]
fn sweep_rejects_bad_requests() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario(tmp.path(), "pipe.json", SLOTTED);
    let out = tmp.path().join("sw");
    let base = ["sweep", "--config", s(&cfg), "--out", s(&out)];
    let run = |extra: &[&str]| netlb(&[&base[..], extra].concat()).status.code();
    assert_eq!(run(&["--param", "T", "--values", ""]), Some(2));
    assert_eq!(run(&["--param", "T"]), Some(2));
    assert_eq!(run(&["--param", "colour", "--values", "1"]), Some(2));
    assert_eq!(run(&["--param", "T", "--values", "ten"]), Some(2));
    // 2000 slots cannot be cut into intervals of 300
    assert_eq!(run(&["--param", "T", "--values", "300"]), Some(2));
}

#[test]
fn validate_lists_violations() {
    let tmp = TempDir::new().unwrap();
    let good = scenario(tmp.path(), "good.json", SLOTTED);
    let o = netlb(&["validate", "--config", s(&good)]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("ok"));

    let cyclic = SLOTTED.replace(
        r#"{"switch": 2, "commodity": 3, "via": [3]}"#,
        r#"{"switch": 2, "commodity": 3, "via": [1]}"#,
    );
    let bad = scenario(tmp.path(), "bad.json", &cyclic);
    let o = netlb(&["validate", "--config", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stdout.is_empty());
}

#[test]
fn alloc_debug_logs_and_checks_against_the_oracle() {
    let o = netlb(&["alloc-debug", "--demand", "1:9:0", "--demand", "2:1:0", "--budget", "4", "--k-max", "1", "--oracle"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("packet fill"), "{text}");
    assert!(text.contains("x[d1] = 4"), "{text}");
    assert!(text.contains("oracle agrees: true"), "{text}");

    let o = netlb(&["alloc-debug", "--demand", "1:5:0", "--budget", "6", "--algorithm", "maxweight", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["branch"], "max_weight");

    assert_eq!(netlb(&["alloc-debug", "--demand", "1:x", "--budget", "4"]).status.code(), Some(2));
    assert_eq!(netlb(&["alloc-debug", "--demand", "1:1:0", "--demand", "1:2:0", "--budget", "4"]).status.code(), Some(2));
}
