//! End-to-end tests of the binary: config validation errors, artifact
//! shape, deterministic re-export, sweeps, and the check battery.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fracwave(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracwave"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn small_config() -> &'static str {
    r#"{
  "domain": {"d": 1, "L": 1.0, "kappa": 2, "N": 64},
  "physics": {"s": 0.75, "nu": 1e-3, "epsilon": 1e-3, "T": 0.5, "steps": 40},
  "coefficients": {"A": {"scalar": 0.5}, "B": {"scalar": 0.05}},
  "graph": {"type": "lower", "a": 0.0},
  "data": {
    "w0": {"bump": {"amplitude": 0.25, "center": 0.5, "width": 0.2}},
    "w1": {"mode": {"amplitude": -1.5, "k": 1}}
  },
  "output": {"directory": "out", "formats": ["csv", "json"], "node_stride": 4, "time_stride": 5}
}"#
}

#[test]
fn run_writes_artifacts_with_pinned_headers() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), small_config()).unwrap();
    let out = fracwave(&["run", "--config", "c.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("solved 40 steps"), "{stdout}");

    let energy = fs::read_to_string(dir.path().join("out/energy.csv")).unwrap();
    assert_eq!(
        energy.lines().next().unwrap(),
        "t,kinetic,elastic,penalty,dissipation,work,residual"
    );
    assert_eq!(energy.lines().count(), 1 + 41);

    let traj = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    // 32 interior nodes decimated by 4 → 8 displacement columns
    assert_eq!(traj.lines().next().unwrap().split(',').count(), 9);

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/metadata.json")).unwrap())
            .unwrap();
    assert_eq!(meta["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(meta["seed"], 0);
    assert!(meta["versions"]["fracwave"].is_string());
    assert!(meta.get("timestamp").is_none());

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["interior_nodes"], 32);
    assert_eq!(report["energy"]["t"].as_array().unwrap().len(), 41);
}

#[test]
fn export_reproduces_run_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), small_config()).unwrap();
    let run = fracwave(&["run", "--config", "c.json", "--out", "a"], dir.path());
    assert!(run.status.success());
    let export = fracwave(&["export", "--config", "c.json", "--out", "b"], dir.path());
    assert!(export.status.success());
    // export is silent
    assert!(export.stdout.is_empty());
    for name in ["energy.csv", "trajectory.csv", "report.json", "metadata.json"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between run and export");
    }
}

#[test]
fn invalid_config_lists_every_violation_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = r#"{
  "domain": {"d": 1, "L": 1.0, "kappa": 2, "N": 64},
  "physics": {"s": 0.75, "nu": 1e-3, "epsilon": 1.5, "T": 0.5, "steps": 0},
  "graph": {"type": "two_sided", "a": 0.5, "b": -1.0}
}"#;
    fs::write(dir.path().join("bad.json"), bad).unwrap();
    let out = fracwave(&["run", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    for needle in [
        "physics.epsilon: epsilon must lie in (0,1)",
        "physics.steps",
        "graph.a: interval must contain 0",
        "graph.b: interval must contain 0",
    ] {
        assert!(stderr.contains(needle), "missing {needle:?} in:\n{stderr}");
    }
}

#[test]
fn unknown_keys_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = small_config().replace(r#""steps": 40"#, r#""steps": 40, "dt": 0.1"#);
    fs::write(dir.path().join("c.json"), text).unwrap();
    let out = fracwave(&["run", "--config", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt"));
}

#[test]
fn resolution_override_replaces_grid_points() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), small_config()).unwrap();
    let out = fracwave(
        &["run", "--config", "c.json", "--resolution-override", "128", "--threads", "2"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    // 64 interior nodes decimated by 4 → 16 displacement columns
    assert_eq!(traj.lines().next().unwrap().split(',').count(), 17);
}

#[test]
fn epsilon_sweep_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    // the time step must resolve the stiffest contact layer (π√ε ≈ 0.1 at
    // ε = 1e−3), so the sweep runs the obstacle scenario at full resolution
    let text = r#"{
  "domain": {"d": 1, "L": 1.0, "kappa": 2, "N": 128},
  "physics": {"s": 0.75, "nu": 1e-3, "epsilon": 1e-3, "T": 1.5, "steps": 600},
  "coefficients": {"A": {"scalar": 0.5}, "B": {"scalar": 0.05}},
  "graph": {"type": "lower", "a": 0.0},
  "data": {
    "w0": {"mode": {"amplitude": 0.25, "k": 1}},
    "w1": {"mode": {"amplitude": -1.5, "k": 1}}
  },
  "sweep": {"axis": "epsilon", "values": [1e-1, 1e-2, 1e-3]},
  "output": {"directory": "out", "formats": ["csv", "json"]}
}"#;
    fs::write(dir.path().join("c.json"), text).unwrap();
    let out = fracwave(&["sweep", "--config", "c.json", "--seed", "5"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("epsilon,"), "{header}");
    assert!(header.ends_with(",cauchy_qt,cauchy_final"), "{header}");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    // the first row has no predecessor, so its Cauchy cells are empty
    assert!(rows[0].ends_with(",,"), "{}", rows[0]);
    let cols = header.split(',').count();
    for row in &rows {
        assert_eq!(row.split(',').count(), cols, "{row}");
    }

    let sweep_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/sweep.json")).unwrap())
            .unwrap();
    assert_eq!(sweep_json["axis"], "epsilon");
    assert_eq!(sweep_json["pass"], true);
    assert_eq!(sweep_json["rows"].as_array().unwrap().len(), 3);

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/metadata.json")).unwrap())
            .unwrap();
    assert_eq!(meta["seed"], 5);
}

#[test]
fn sweep_without_a_sweep_section_fails() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), small_config()).unwrap();
    let out = fracwave(&["sweep", "--config", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no sweep section"));
}

#[test]
fn check_only_runs_a_single_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracwave(&["check", "--only", "4"], dir.path());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{stdout}");
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("[PASS] 04 regularized-graph laws"), "{stdout}");
}
