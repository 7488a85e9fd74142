use std::path::Path;
use std::process::{Command, Output};

fn wingload(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wingload")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SHORT_GUST: &str = r#"
name = "short"
duration = 6.0
noise = true

[gust]
amplitude = 2.0
frequency = 1.0
repeat = 2
gap = 0.5
start = 1.0
"#;

#[test]
fn run_writes_log_metrics_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "short.toml", SHORT_GUST);
    let out = dir.path().join("out");
    let res = wingload(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));

    let csv = std::fs::read_to_string(out.join("short.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("t,u_1,"));
    assert!(header.ends_with("Fy_raw,Fy_filt,Mx_raw,Mx_filt,Fy_ref,Mx_ref,alpha_g,eps_ca_norm,iters,sat_flags"));
    assert_eq!(csv.lines().count(), 1 + 400);

    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("short_metrics.json")).unwrap()).unwrap();
    assert!(metrics["reduction"]["fy_rms"].as_f64().unwrap() > 0.0);
    assert!(out.join("short_diag.json").exists());

    let cert = wingload(&["certify", out.join("short_diag.json").to_str().unwrap()]);
    assert_eq!(cert.status.code(), Some(0));
    let text = String::from_utf8_lossy(&cert.stdout);
    assert!(text.contains("ultimate_bound"));
    assert!(text.contains("certificate holds"));
}

#[test]
fn repeated_runs_are_byte_identical_and_seed_matters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "short.toml", SHORT_GUST);
    let read = |sub: &str, seed: &str| {
        let out = dir.path().join(sub);
        let res = wingload(&["run", &cfg, "--out", out.to_str().unwrap(), "--seed", seed]);
        assert_eq!(res.status.code(), Some(0));
        std::fs::read(out.join("short.csv")).unwrap()
    };
    let a = read("a", "7");
    let b = read("b", "7");
    let c = read("c", "8");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn sweep_and_compare_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "short.toml", SHORT_GUST);
    let out = dir.path().to_str().unwrap();

    let res = wingload(&["sweep", &cfg, "--freqs", "0.5,2", "--out", out]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let table = std::fs::read_to_string(dir.path().join("short_sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.lines().nth(2).unwrap().starts_with("2,"));

    let res = wingload(&["compare", &cfg, "--controllers", "indi-qp-v,indi-pi", "--conditions", "no-noise", "--out", out]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let table = std::fs::read_to_string(dir.path().join("short_compare.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("no-noise,indi-qp-v,"));
    assert!(rows[1].starts_with("no-noise,indi-pi,"));
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let typo = write(dir.path(), "typo.toml", "name = \"x\"\ndurration = 3.0\n");
    assert_eq!(wingload(&["run", &typo, "--out", out]).status.code(), Some(1));
    let bad = write(dir.path(), "bad.toml", "name = \"x\"\nduration = -1.0\n");
    assert_eq!(wingload(&["run", &bad, "--out", out]).status.code(), Some(1));
    let no_gust = write(dir.path(), "calm.toml", "name = \"calm\"\nduration = 1.0\n");
    assert_eq!(wingload(&["sweep", &no_gust, "--freqs", "1", "--out", out]).status.code(), Some(1));
    let garbage = write(dir.path(), "diag.json", "{ not json");
    assert_eq!(wingload(&["certify", &garbage]).status.code(), Some(1));
}

#[test]
fn divergence_exits_with_two_and_keeps_partial_log() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "storm.toml",
        "name = \"storm\"\nduration = 5.0\n\n[gust]\namplitude = 5000.0\nfrequency = 0.5\nrepeat = 1\nstart = 0.5\n",
    );
    let res = wingload(&["run", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = std::fs::read_to_string(dir.path().join("storm.csv")).unwrap();
    let rows = csv.lines().count() - 1;
    assert!(rows > 0 && rows < (5.0 / 0.015) as usize);
}

#[test]
fn io_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    let out = dir.path().to_str().unwrap();
    assert_eq!(wingload(&["run", missing.to_str().unwrap(), "--out", out]).status.code(), Some(3));
    assert_eq!(wingload(&["certify", missing.to_str().unwrap()]).status.code(), Some(3));

    let cfg = write(dir.path(), "short.toml", "name = \"short\"\nduration = 1.0\n");
    let blocker = write(dir.path(), "blocker", "");
    assert_eq!(wingload(&["run", &cfg, "--out", &blocker]).status.code(), Some(3));
}
