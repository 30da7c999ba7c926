use std::path::Path;
use std::process::{Command, Output};

fn forestseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forestseg")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = forestseg(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate(dir: &Path, seed: &str) -> std::path::PathBuf {
    ok(&["generate", "--out", p(dir), "--side", "80", "--tiles", "2", "--seed", seed]);
    dir.join("manifest.json")
}

#[test]
fn generate_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate(a.path(), "3");
    generate(b.path(), "3");
    for f in ["tile-0000.fst", "tile-0003.fst", "truth.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn distributed_outputs_agree_across_workers_and_transports() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate(dir.path(), "5");
    let m = p(&manifest);
    let out = |name: &str| dir.path().join(name);
    ok(&["distribute", "--manifest", m, "--out", p(&out("w1.csv")), "--workers", "1"]);
    ok(&["distribute", "--manifest", m, "--out", p(&out("w4.csv")), "--workers", "4"]);
    ok(&["distribute", "--manifest", m, "--out", p(&out("sock.csv")), "--workers", "2", "--transport", "socket"]);
    ok(&["distribute", "--manifest", m, "--out", p(&out("spawn.csv")), "--workers", "2", "--transport", "socket", "--spawn"]);
    let w1 = std::fs::read_to_string(out("w1.csv")).unwrap();
    assert!(w1.lines().count() > 5);
    for f in ["w4.csv", "sock.csv", "spawn.csv"] {
        assert_eq!(std::fs::read_to_string(out(f)).unwrap(), w1, "{f}");
    }
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out("w4.metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["tiles"], 4);
}

#[test]
fn sequential_and_stats_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate(dir.path(), "7");
    let crowns = dir.path().join("seq.csv");
    ok(&["segment-sequential", "--manifest", p(&manifest), "--out", p(&crowns)]);
    let stats = dir.path().join("stats");
    ok(&["stats", "--crowns", p(&crowns), "--out-dir", p(&stats)]);
    for f in ["height_histogram.csv", "mixture.json"] {
        assert!(stats.join(f).exists(), "{f}");
    }
}

#[test]
fn model_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curves.csv");
    let out = ok(&["model", "--out", p(&csv)]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("9279"));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 1 + 4 * 13);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(forestseg(&["generate", "--out", p(dir.path()), "--density=-1"]).status.code(), Some(2));
    assert_eq!(forestseg(&["no-such-command"]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    let out = dir.path().join("o.csv");
    assert_eq!(forestseg(&["distribute", "--manifest", p(&missing), "--out", p(&out)]).status.code(), Some(4));
}
