use std::process::{Command, Output};

fn shrinklab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shrinklab")).args(args).output().expect("spawn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn cf_prints_convergents() {
    let o = shrinklab(&["cf", "--alpha", "13/21"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("quotients: 1,1,1,1,1,2"), "{s}");
    assert!(s.contains("horizon: 10"));
    assert!(s.contains("6;13;21"));
}

#[test]
fn orbit_past_horizon_is_a_config_error() {
    assert_eq!(shrinklab(&["orbit", "--map", "alpha:13/21", "--x", "0", "--n", "9"]).status.code(), Some(0));
    let o = shrinklab(&["orbit", "--map", "alpha:13/21", "--x", "0", "--n", "10"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn orbit_code_word() {
    let o = shrinklab(&["orbit", "--map", "alpha:13/21", "--x", "0", "--n", "5", "--code"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim().len(), 5);
}

#[test]
fn hits_and_towers_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = shrinklab(&["hits", "--map", "golden:30", "--radius", "harmonic:1/2", "--checkpoints", "10,100", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("hits.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("N;S_N;E_N_num;E_N_den"));

    let o = shrinklab(&["towers", "--map", "golden:20", "--n", "10", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let towers = std::fs::read_to_string(dir.path().join("towers.csv")).unwrap();
    assert!(towers.starts_with("base_left;base_length;height"));
}

#[test]
fn failed_tower_check_exits_with_two() {
    // the greedy construction exceeds 3d towers on this 4-IET
    let map = "iet:414213562373/1000000000000,232050807568/1000000000000,314159265358/1000000000000,39576364701/1000000000000|4,3,2,1";
    let o = shrinklab(&["towers", "--map", map, "--n", "50"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("\"count_within_3d\":false"));
}

#[test]
fn run_config_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    std::fs::write(
        &cfg,
        "# small hits run\nkind = hits\nmap = golden:40\nradius = harmonic:1/2\nseeds = 4\ncheckpoints = geometric:100,10,3\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = shrinklab(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS hit_bound"));
    for f in ["report.json", "aggregate.csv", "seed_000.csv", "seed_003.csv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["checkpoints"], serde_json::json!([100, 1000, 10000]));
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "kind = hits\nmap = golden:40\nradius = harmonic:1/2\ncolour = blue\n").unwrap();
    let o = shrinklab(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    let o = shrinklab(&["run", dir.path().join("missing.conf").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn spike_witness_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = shrinklab(&["spike", "--m", "8", "--k", "50", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("spike.json")).unwrap()).unwrap();
    assert_eq!(v["count_max"], 50);
    assert_eq!(v["count_min"], 1);
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "conf") {
            shrinklab::harness::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 3);
}
