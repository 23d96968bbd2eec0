use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use bosonic_control::experiment::{run, ExperimentError, COMMANDS};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bosonic-control"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"))
}

fn run_bin(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg(cmd).arg("--config").arg(cfg).arg("--out").arg(out).args(extra).output().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap()
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let p = dir.path().join("cfg.json");
    fs::write(&p, text).unwrap();
    p
}

fn all_files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(all_files(&p));
        } else {
            out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
        }
    }
    out.sort();
    out
}

#[test]
fn every_shipped_config_passes() {
    for cmd in COMMANDS {
        let out = TempDir::new().unwrap();
        let res = run_bin(cmd, &config(cmd), out.path(), &["--jobs", "1"]);
        assert!(res.status.success(), "{cmd}: {}", String::from_utf8_lossy(&res.stderr));
        let r = report(out.path());
        assert_eq!(r["command"], cmd);
        assert_eq!(r["ok"], true);
        // No temporary files are left behind by the atomic writes.
        assert!(all_files(out.path()).iter().all(|(p, _)| !p.to_string_lossy().contains(".tmp-")));
    }
}

#[test]
fn recur_on_the_oscillator_finds_four_pi() {
    let out = TempDir::new().unwrap();
    assert!(run_bin("recur", &config("recur"), out.path(), &[]).status.success());
    let t = report(out.path())["result"]["plan"]["t_tilde"].as_f64().unwrap();
    assert!((t - 4.0 * std::f64::consts::PI).abs() < 1e-6, "{t}");
    let trace = fs::read_to_string(out.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,objective\n"));
}

#[test]
fn closure_reports_dimension_three() {
    let out = TempDir::new().unwrap();
    assert!(run_bin("closure", &config("closure"), out.path(), &[]).status.success());
    let r = report(out.path());
    assert_eq!(r["result"]["dim"], 3);
    assert_eq!(r["result"]["saturated"], true);
}

#[test]
fn unknown_subcommand_prints_usage_and_exits_2() {
    let res = bin().arg("frobnicate").output().unwrap();
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("Usage"));
    assert!(matches!(run("frobnicate", "{}", None), Err(ExperimentError::UnknownCommand(_))));
}

#[test]
fn schema_errors_carry_json_pointers() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("closure", r#"{"hamiltonians": ["(1,0) * q1^2", 7]}"#, "/hamiltonians/1"),
        ("closure", r#"{"hamiltonians": ["(1,0) * q1^2"], "colour": 1}"#, "/colour"),
        ("closure", r#"{"hamiltonians": ["(1,0) * q1 p1"]}"#, "/hamiltonians/0"),
        ("trotter", r#"{"system": {"hamiltonians": ["(1,0) * q1"], "truncation": {"dim": "x"}}}"#, "/system/truncation/dim"),
        (
            "compile",
            r#"{"system": {"hamiltonians": ["(1,0) * q1"], "truncation": {"dim": 16}},
                "targets": [{"name": "a", "expr": {"op": "leaf", "k": 3}, "t": 1.0}],
                "eps": 0.1, "initial": {"fock": {"levels": [0]}}}"#,
            "/targets/0/expr",
        ),
        (
            "recur",
            r#"{"spectrum": [0, 1, 2], "delta": -1, "mode": {"energy_bound": {"m": 1}}}"#,
            "/delta",
        ),
    ];
    for (cmd, text, pointer) in cases {
        let err = run(cmd, text, None).unwrap_err();
        match &err {
            ExperimentError::Config { pointer: p, .. } => assert_eq!(p, pointer, "{cmd}: {err}"),
            other => panic!("{cmd}: expected a config error, got {other}"),
        }
        let res = run_bin(cmd, &write_config(&dir, text), &dir.path().join("out"), &[]);
        assert_eq!(res.status.code(), Some(2), "{cmd}");
        assert!(String::from_utf8_lossy(&res.stderr).contains(&format!("`{pointer}`")));
    }
}

#[test]
fn sampled_states_need_a_seed() {
    let text = r#"{"spectrum": [0, 1, 2, 3], "delta": 0.3, "mode": {"pointwise": {"state": {"random": {"max_level": 4}}}}}"#;
    let err = run("recur", text, None).unwrap_err();
    assert!(matches!(err, ExperimentError::Config { ref pointer, .. } if pointer == "/mode/pointwise/state"), "{err}");
    assert!(run("recur", text, Some(5)).unwrap().ok);
}

#[test]
fn failed_verification_exits_nonzero() {
    let dir = TempDir::new().unwrap();
    let text = r#"{"hamiltonians": ["(1,0) * q1^2", "(1,0) * p1^2"], "expect_dim": 4}"#;
    let out = dir.path().join("out");
    let res = run_bin("closure", &write_config(&dir, text), &out, &[]);
    assert_eq!(res.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["ok"], false);
    assert!(r["failures"][0].as_str().unwrap().contains("expected dimension 4"));

    // A compile budget too small to meet eps.
    let text = r#"{"system": {"hamiltonians": ["(1,0) * q1", "(1,0) * p1"], "truncation": {"dim": 24}},
        "targets": [{"name": "sum", "expr": {"op": "sum", "left": {"op": "leaf", "k": 0},
                     "right": {"op": "leaf", "k": 1}}, "t": 1.0}],
        "eps": 1e-6, "n_budget": 4, "initial": {"fock": {"levels": [0]}}}"#;
    let res = run_bin("compile", &write_config(&dir, text), &out, &[]);
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(report(&out)["result"]["report"]["failed"], 1);
}

#[test]
fn missing_recurrence_is_a_failure() {
    let dir = TempDir::new().unwrap();
    let text = r#"{"spectrum": [0, 1, 1.4142135623730951, 3.141592653589793], "delta": 1e-7,
        "mode": {"pointwise": {"state": {"amplitudes": {"values": [[1,0],[1,0],[1,0],[1,0]]}}}},
        "search": {"t_max": 100.0}}"#;
    let res = run_bin("recur", &write_config(&dir, text), &dir.path().join("out"), &[]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("no recurrence"));
}

#[test]
fn reruns_are_bit_identical() {
    for cmd in ["invert", "compile", "chain-demo"] {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        assert!(run_bin(cmd, &config(cmd), a.path(), &["--seed", "17"]).status.success());
        assert!(run_bin(cmd, &config(cmd), b.path(), &["--seed", "17", "--jobs", "1"]).status.success());
        assert_eq!(all_files(a.path()), all_files(b.path()), "{cmd}");
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let a = run("invert", &fs::read_to_string(config("invert")).unwrap(), Some(1)).unwrap();
    let b = run("invert", &fs::read_to_string(config("invert")).unwrap(), Some(2)).unwrap();
    assert_eq!(a.report["seed"], 1);
    assert_ne!(a.report["result"]["distances"], b.report["result"]["distances"]);
}
