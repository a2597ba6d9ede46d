//! End-to-end checks of the `fconc` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("fconc-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.0.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn fconc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fconc"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn with_config(config: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["--config", config.to_str().unwrap()];
    args.extend_from_slice(extra);
    fconc(&args)
}

fn record(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

const BELL: &str = "schema = \"fconc-config/1\"\n[state]\nalpha = [0.7071067811865476, 0.0]\ndelta = [0.7071067811865476, 0.0]\n";

#[test]
fn analytic_bell_record() {
    let dir = Scratch::new("analytic");
    let cfg = dir.file("bell.toml", BELL);
    let r = record(&with_config(&cfg, &["--mode", "analytic"]));
    assert_eq!(r["schema"], "fconc-record/1");
    assert_eq!(r["mode"], "analytic");
    let res = &r["results"];
    assert!((res["p_total"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((res["oracle_c"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((res["corrected"]["concurrence"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn state_flag_without_config() {
    let out = fconc(&["--mode", "oracle", "--state", "0.6,0,0,0,0,0,0,0.8"]);
    let r = record(&out);
    let c = r["results"]["concurrence_mixed"].as_f64().unwrap();
    assert!((c - 0.96).abs() < 1e-12, "{c}");
}

#[test]
fn bad_norm_exits_2() {
    let dir = Scratch::new("norm");
    let cfg = dir.file(
        "bad.toml",
        "mode = \"analytic\"\n[state]\nalpha = [1.5, 0.0]\n",
    );
    let out = with_config(&cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("norm"));
}

#[test]
fn unknown_key_exits_2() {
    let dir = Scratch::new("unknown");
    let cfg = dir.file("bad.toml", &format!("{BELL}[simulation]\ntrails = 10\n"));
    let out = with_config(&cfg, &["--mode", "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trails"));
}

#[test]
fn missing_config_file_exits_2() {
    let out = fconc(&["--config", "/nonexistent/fconc.toml", "--mode", "analytic"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn singular_cavity_exits_3() {
    let dir = Scratch::new("singular");
    let cfg = dir.file(
        "cav.toml",
        "mode = \"phases\"\n[cavity]\nomega_c = 1.0\nomega_p = 1.0\nomega_0 = 1.0\nkappa = 1.0\ngamma = 0.0\nlambda = 0.0\n",
    );
    let out = with_config(&cfg, &[]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn inconsistent_observation_exits_4() {
    let out = fconc(&[
        "--mode",
        "analytic",
        "--state",
        "1,0,0,0,0,0,0,0",
        "--sigma",
        "0.1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(4),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn phases_mode_ideal_cavity() {
    let dir = Scratch::new("phases");
    let cfg = dir.file(
        "cav.toml",
        "mode = \"phases\"\n[cavity]\nomega_c = 10.0\nomega_p = 9.5\nomega_0 = 10.0\nkappa = 1.0\ngamma = 0.0\nlambda = 0.5\n",
    );
    let r = record(&with_config(&cfg, &[]));
    let phases = &r["results"]["phases"];
    assert!((phases["phi"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-9);
    assert!((phases["phi0"].as_f64().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
}

#[test]
fn record_replays_identically() {
    let dir = Scratch::new("replay");
    let cfg = dir.file("sim.toml", BELL);
    let first = with_config(
        &cfg,
        &[
            "--mode", "simulate", "--trials", "5000", "--seed", "9", "--eta", "0.8",
        ],
    );
    let rec = dir.file("first.json", std::str::from_utf8(&first.stdout).unwrap());
    let second = with_config(&rec, &[]);
    assert!(second.status.success());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn out_flag_writes_record() {
    let dir = Scratch::new("out");
    let cfg = dir.file("bell.toml", BELL);
    let target = dir.path("record.json");
    let out = with_config(
        &cfg,
        &["--mode", "analytic", "--out", target.to_str().unwrap()],
    );
    let printed = record(&out);
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(printed, written);
}

fn parse_table(text: &str) -> Vec<Vec<f64>> {
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "axis_value,p1,p2,p_total,c_est,c_corrected,oracle_c,ci_low,ci_high"
    );
    lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn sigma_sweep_table() {
    let dir = Scratch::new("sweep");
    let cfg = dir.file(
        "sweep.toml",
        &(BELL.replace("[state]", "mode = \"sweep\"\n[state]")
            + "[simulation]\ntrials = 200000\nseed = 3\n[sweep]\naxis = \"sigma\"\nstart = 0.0\nstop = 0.3\nsteps = 7\n"),
    );
    let out = with_config(&cfg, &[]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = parse_table(std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().flatten().all(|v| v.is_finite()));
    assert!((rows[6][0] - 0.3).abs() < 1e-15);
    // the uncorrected estimate drifts above the corrected one as σ grows
    let gap: Vec<f64> = rows.iter().map(|r| r[4] - r[5]).collect();
    assert!(gap.windows(2).all(|w| w[1] > w[0] - 2e-3), "{gap:?}");
    assert!(gap[6] > gap[0] + 0.05, "{gap:?}");
}

#[test]
fn per_atom_leak_model_corrects_bell_sweep() {
    let dir = Scratch::new("sweep-per-atom");
    let cfg = dir.file(
        "sweep.toml",
        &(BELL.replace("[state]", "mode = \"sweep\"\n[state]")
            + "[simulation]\ntrials = 200000\nseed = 4\n[imperfections]\nleak_model = \"per-atom\"\n\
               [sweep]\naxis = \"sigma\"\nstart = 0.0\nstop = 0.3\nsteps = 4\n"),
    );
    let out = with_config(&cfg, &[]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    for r in parse_table(std::str::from_utf8(&out.stdout).unwrap()) {
        assert!((r[5] - 1.0).abs() < 0.02, "corrected {r:?}");
    }
}

#[test]
fn sweep_with_out_writes_csv() {
    let dir = Scratch::new("sweep-out");
    let cfg = dir.file(
        "sweep.toml",
        &(BELL.replace("[state]", "mode = \"sweep\"\n[state]")
            + "[simulation]\ntrials = 1000\n[sweep]\naxis = \"eta_a\"\nstart = 0.5\nstop = 1.0\nsteps = 3\n"),
    );
    let target = dir.path("table.csv");
    let out = with_config(&cfg, &["--out", target.to_str().unwrap()]);
    let r = record(&out);
    assert_eq!(r["results"]["rows"].as_array().unwrap().len(), 3);
    let rows = parse_table(&std::fs::read_to_string(&target).unwrap());
    assert_eq!(
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        vec![0.5, 0.75, 1.0]
    );
}
