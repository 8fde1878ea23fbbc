use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn cvkraus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvkraus")).args(args).env_remove("CVKRAUS_THREADS").output().unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cvkraus-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn error_json(out: &Output) -> Value {
    assert!(!out.status.success());
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn errors_are_json_on_stderr() {
    let e = error_json(&cvkraus(&["ec-sweep", "--case", "Q", "--beta", "0.05", "--steps", "2"]));
    assert_eq!(e["error"], "invalid_parameter");
    assert!(e["message"].as_str().unwrap().contains("'Q'"));

    let e = error_json(&cvkraus(&["frobnicate"]));
    assert_eq!(e["error"], "usage");

    let e = error_json(&cvkraus(&["identities", "--id", "nope"]));
    assert_eq!(e["error"], "unknown_identity");

    let e = error_json(&cvkraus(&["wavefunction", "--state", "gkp0", "--beta", "0.1", "--grid", "1:0:0.1"]));
    assert_eq!(e["error"], "invalid_parameter");

    let out = Command::new(env!("CARGO_BIN_EXE_cvkraus"))
        .args(["kraus-compare", "--theta-a", "1.2", "--theta-b", "0.3", "--ancilla-psi", "squeezed_p:0.05"])
        .args(["--ancilla-phi", "squeezed_q:0.05", "--ma", "0", "--mb", "0"])
        .env("CVKRAUS_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(error_json(&out)["error"], "usage");
}

#[test]
fn wavefunction_csv_is_deterministic() {
    let args = ["wavefunction", "--state", "gkp1", "--beta", "0.0138", "--grid", "-6:6:0.01"];
    let a = cvkraus(&args);
    let b = cvkraus(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,re,im,abs2"));
    assert_eq!(lines.count(), 1201);
}

#[test]
fn config_values_are_overridden_by_flags() {
    let cfg = tmp("wf.json");
    std::fs::write(&cfg, r#"{"state": "plus", "beta": 0.3, "basis": "p", "grid": "-2:2:0.5", "method": "fock", "cutoff": 40}"#)
        .unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = cvkraus(&["wavefunction", "--config", cfg, "--beta", "0.2"]);
    let direct = cvkraus(&[
        "wavefunction", "--state", "plus", "--beta", "0.2", "--basis", "p", "--grid", "-2:2:0.5", "--method", "fock",
        "--cutoff", "40",
    ]);
    assert!(from_file.status.success(), "{}", String::from_utf8_lossy(&from_file.stderr));
    assert_eq!(from_file.stdout, direct.stdout);
    let other = cvkraus(&["wavefunction", "--config", cfg]);
    assert_ne!(other.stdout, direct.stdout);
}

#[test]
fn identity_report_file() {
    let path = tmp("report.json");
    let out = cvkraus(&["identities", "--id", "measurement_v_mu", "--cutoff", "30", "--betas", "0.1,0.05", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let r = &v.as_array().unwrap()[0];
    assert_eq!(r["id"], "measurement_v_mu");
    assert_eq!(r["cutoff"], 30);
    assert_eq!(r["betas"].as_array().unwrap().len(), 2);
    assert_eq!(r["pass"], true);
}

#[test]
fn kraus_compare_prints_distance() {
    let out = cvkraus(&[
        "kraus-compare", "--theta-a", "1.2", "--theta-b", "0.3", "--ancilla-psi", "squeezed_p:0.05", "--ancilla-phi",
        "squeezed_q:0.05", "--ma", "0.5", "--mb", "-0.2", "--cutoff", "30",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["distance"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["interior"], 20);
}
