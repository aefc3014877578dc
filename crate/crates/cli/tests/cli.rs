use std::path::Path;
use std::process::{Command, Output};

use rbmelt::io::{CampaignManifest, NumericTable, Snapshot};

const SMALL: &str = "\
[grid]
nx = 32
ny = 8
aspect = 4.0
[physics]
ra = 1e3
[numerics]
dt = 1e-3
t_final = 0.02
h0 = 0.1
[output]
snapshot_every = 10
";

fn rbmelt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbmelt")).args(args).output().unwrap()
}

fn with_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, format!("{SMALL}{extra}")).unwrap();
    path.to_str().unwrap().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn zero_time_step_is_an_input_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.toml");
    std::fs::write(&cfg, "[numerics]\ndt = 0.0\n").unwrap();
    let out = d.path().join("o");
    let o = rbmelt(&["forward", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn unknown_key_is_an_input_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.toml");
    std::fs::write(&cfg, "[physics]\nrayleigh = 1e4\n").unwrap();
    let o = rbmelt(&["forward", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_profile_is_an_input_error() {
    assert_eq!(code(&rbmelt(&["forward", "--profile", "huge"])), 2);
}

#[test]
fn gradcheck_without_a_target_is_an_input_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = with_config(d.path(), "");
    let o = rbmelt(&["gradcheck", "--config", &cfg, "--out", d.path().join("g").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn plotdata_needs_a_manifest() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&rbmelt(&["plotdata", d.path().to_str().unwrap()])), 2);
}

#[test]
fn forward_run_writes_a_verifiable_campaign() {
    let d = tempfile::tempdir().unwrap();
    let cfg = with_config(d.path(), "");
    let run = |name: &str| {
        let out = d.path().join(name);
        let o = rbmelt(&["forward", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a");
    let b = run("b");

    let m = CampaignManifest::read(&a).unwrap();
    assert_eq!(m.status, "complete");
    m.verify(&a).unwrap();
    assert!(m.summary.contains_key("final_h_bar"));

    // identical inputs give identical bytes
    let diag = std::fs::read(a.join("diagnostics.csv")).unwrap();
    assert_eq!(diag, std::fs::read(b.join("diagnostics.csv")).unwrap());
    let t = NumericTable::read(&a.join("diagnostics.csv")).unwrap();
    assert_eq!(t.rows.len(), 21);

    let snap = Snapshot::read(&a.join("snapshots/temperature_000010.txt")).unwrap();
    assert_eq!((snap.nx, snap.ny), (32, 8));
    let again = Snapshot::parse(&snap.to_text()).unwrap();
    assert_eq!(again, snap);

    let o = rbmelt(&["plotdata", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let p = NumericTable::read(&a.join("diagnostics.csv")).unwrap();
    let text = std::fs::read_to_string(d.path().join("plotdata.csv")).unwrap();
    let count = |s: &str| text.lines().filter(|l| l.starts_with(&format!("{s},{}", m.label()))).count();
    // both campaigns share a configuration, hence a label
    assert_eq!(count("h_bar"), 2 * p.rows.len());
    assert_eq!(count("Ra_e"), count("h_bar"));
}

#[test]
fn small_optimization_campaign_records_its_history() {
    let d = tempfile::tempdir().unwrap();
    let cfg = with_config(d.path(), "[target]\ncoefficients = [0.3, 2.0]\n[lbfgs]\nmax_iter = 3\n");
    let out = d.path().join("opt");
    let o = rbmelt(&["optimize", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = CampaignManifest::read(&out).unwrap();
    m.verify(&out).unwrap();
    let h = NumericTable::read(&out.join("history.csv")).unwrap();
    let j = h.column("J").unwrap();
    assert!(j.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(h.column("cost_calls").unwrap().last().copied(), Some(m.counters.cost_calls as f64));
}
