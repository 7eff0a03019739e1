//! Keeps `configs/*.json` in step with the scenario builders.
//! Run with `NETLB_REGENERATE_CONFIGS=1` to rewrite the files.

use std::path::PathBuf;

use netlb::network::{derive_sets, load_scenario, load_scenario_file, validate_topology};
use netlb::scenarios::shipped;
use netlb::ConfigError;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_match_builders() {
    let regenerate = std::env::var_os("NETLB_REGENERATE_CONFIGS").is_some();
    for (file, doc) in shipped() {
        let path = configs_dir().join(file);
        let want = serde_json::to_string_pretty(&doc).unwrap() + "\n";
        if regenerate {
            std::fs::write(&path, &want).unwrap();
            continue;
        }
        let have = std::fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("{}: {e}; rerun with NETLB_REGENERATE_CONFIGS=1", path.display()));
        assert_eq!(have, want, "{file} is stale; rerun with NETLB_REGENERATE_CONFIGS=1");
        let cfg = load_scenario_file(&path).unwrap();
        assert!(validate_topology(&cfg.topology).is_empty(), "{file}");
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_scenario_file(configs_dir().join("no_such.json")).unwrap_err();
    assert!(matches!(err, ConfigError::Io { .. }));
}

#[test]
fn parse_errors_carry_a_location() {
    let err = load_scenario("{\n  \"version\": 1,\n  \"name\": }").unwrap_err();
    match err {
        ConfigError::Parse { line, .. } => assert_eq!(line, 3),
        other => panic!("{other}"),
    }
}

#[test]
fn previous_hops_mirror_next_hops() {
    let cfg = load_scenario_file(configs_dir().join("fabric.json")).unwrap();
    let sets = derive_sets(&cfg.topology);
    for (&(i, d), hops) in &cfg.topology.next_hops {
        for &j in hops {
            assert!(sets.prev_hops(j, d).contains(&i), "{i:?} -> {j:?} for {d:?}");
        }
    }
}
