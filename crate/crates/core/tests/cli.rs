use std::path::Path;
use std::process::{Command, Output};

fn wsimplex(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wsimplex"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn explore_exploit_evaluate_chain() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ok(&wsimplex(out, &["explore", "--runs", "2", "--steps", "100"]));
    for f in ["qtable.txt", "explore_log.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let log = std::fs::read_to_string(out.join("explore_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 201);
    let modal = ok(&wsimplex(out, &["exploit", "--steps", "50"]));
    assert!(modal.contains("straight"));
    let summary = ok(&wsimplex(out, &["evaluate", "--strategy", "dynamic", "--laps", "1"]));
    assert!(summary.starts_with("dynamic:"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report_dynamic.json")).unwrap()).unwrap();
    assert_eq!(report["laps_requested"], 1);
    assert!(out.join("cycles_dynamic.csv").exists() && out.join("trajectory_dynamic.csv").exists());
}

#[test]
fn same_seed_gives_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        ok(&wsimplex(d.path(), &["--seed", "4", "explore", "--runs", "1", "--steps", "120"]));
        ok(&wsimplex(d.path(), &["--seed", "4", "evaluate", "--strategy", "fixed", "--laps", "1"]));
    }
    for f in ["qtable.txt", "explore_log.csv", "report_fixed.json", "cycles_fixed.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn bn_query_prints_posteriors() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&wsimplex(
        dir.path(),
        &["bn-query", "position=Far", "velocity=Medium", "steering=Straight"],
    ));
    let p: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(p["safe_turn_yes"], 0.8);
}

#[test]
fn ld_bench_with_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("frames");
    let text = ok(&wsimplex(
        dir.path(),
        &["ld-bench", "--frames", "30", "--dump", dump.to_str().unwrap()],
    ));
    assert!(text.starts_with("agreement"));
    assert!(dump.join("labels.csv").exists() && dump.join("frame_00029.gray").exists());
}

#[test]
fn resource_sim_without_manager() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "strategy = \"lec-only\"\n").unwrap();
    let text = ok(&wsimplex(
        dir.path(),
        &["--config", cfg.to_str().unwrap(), "resource-sim", "--duration", "120", "--no-rm"],
    ));
    let s: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(s["offload_events"], 0);
    let trace = std::fs::read_to_string(dir.path().join("resource_trace.csv")).unwrap();
    assert!(trace.lines().next().unwrap().starts_with("time,temperature"));
}

#[test]
fn bad_input_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = wsimplex(dir.path(), &["bn-query", "position=Sideways"]);
    assert_eq!(o.status.code(), Some(2));
    let o = wsimplex(dir.path(), &["exploit"]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "laps = \"many\"\n").unwrap();
    let o = wsimplex(dir.path(), &["--config", cfg.to_str().unwrap(), "bn-query"]);
    assert_eq!(o.status.code(), Some(2));
}
