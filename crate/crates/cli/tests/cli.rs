use std::path::Path;
use std::process::{Command, Output};

use mpskit::io::read_mps;
use mpskit::{AnyMps, Chain};
use serde_json::Value;

fn mpskit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpskit"))
        .args(args)
        .current_dir(dir)
        .env_remove("MPSKIT_CONFIG")
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn state_writes_builtin_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let out = mpskit(dir.path(), &["state", "--name", "aklt", "--n", "8", "--out", "aklt.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let AnyMps::Ti(t) = read_mps(&dir.path().join("aklt.json")).unwrap() else { panic!("expected a ti chain") };
    assert_eq!(t.n_sites(), 8);
    assert_eq!(t.tensor(), &mpskit::states::aklt_tensor());
    let manifest = read_json(&dir.path().join("aklt.manifest.json"));
    assert_eq!(manifest["command"], "state");
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn ghz_blocks_report() {
    let dir = tempfile::tempdir().unwrap();
    assert!(mpskit(dir.path(), &["state", "--name", "ghz", "--n", "6", "--out", "ghz.json"]).status.success());
    let out = mpskit(dir.path(), &["blocks", "--in", "ghz.json", "--out", "rep"]);
    assert!(out.status.success());
    let r = read_json(&dir.path().join("rep/blocks.json"));
    assert_eq!(r["b"], 2);
    assert_eq!(r["sizes"], serde_json::json!([1, 1]));
    assert!(dir.path().join("rep/manifest.json").exists());
}

#[test]
fn oracle_check_over_cap_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(mpskit(dir.path(), &["state", "--name", "ghz", "--n", "24", "--out", "big.json"]).status.success());
    let out = mpskit(dir.path(), &["oracle-check", "--in", "big.json", "--out", "oc"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

#[test]
fn oracle_check_passes_on_builtin() {
    let dir = tempfile::tempdir().unwrap();
    assert!(mpskit(dir.path(), &["state", "--name", "majumdar_ghosh", "--n", "8", "--out", "mg.json"]).status.success());
    let out = mpskit(dir.path(), &["oracle-check", "--in", "mg.json", "--out", "oc"]);
    assert!(out.status.success());
    assert_eq!(read_json(&dir.path().join("oc/oracle-check.json"))["pass"], true);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(mpskit(dir.path(), &["frobnicate"]).status.code(), Some(64));
    std::fs::write(dir.path().join("bad.json"), "{\"format\": \"mpsjson v1\", \"kind\": ").unwrap();
    assert_eq!(mpskit(dir.path(), &["canon", "--in", "bad.json"]).status.code(), Some(65));
    std::fs::write(dir.path().join("odd.json"), r#"{"kind":"obc","d":2,"n_sites":1,"prefactor":[1,0],"tensors":[{"d_left":1,"d_right":1,"data":[[1,0]]}]}"#)
        .unwrap();
    assert_eq!(mpskit(dir.path(), &["canon", "--in", "odd.json"]).status.code(), Some(65));
    assert_eq!(mpskit(dir.path(), &["state", "--name", "nope", "--n", "4"]).status.code(), Some(2));
    assert_eq!(mpskit(dir.path(), &["state", "--name", "ghz", "--n", "4", "--tol-iso", "-1"]).status.code(), Some(2));
    assert_eq!(mpskit(dir.path(), &["state", "--name", "ghz", "--n", "4", "--dense-cap", "100"]).status.code(), Some(2));
    assert!(mpskit(dir.path(), &["state", "--name", "aklt", "--n", "6", "--out", "a.json"]).status.success());
    let strict = mpskit(dir.path(), &["canon", "--in", "a.json", "--tol-iso", "1e-300", "--out", "c"]);
    assert_eq!(strict.status.code(), Some(3));
    assert_eq!(read_json(&dir.path().join("c/canon.json"))["pass"], false);
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    assert!(mpskit(dir.path(), &["state", "--name", "cluster", "--n", "6", "--out", "cl.json"]).status.success());
    for run in ["a", "b"] {
        let out = mpskit(dir.path(), &["sample", "--in", "cl.json", "--shots", "300", "--basis", "x", "--seed", "5", "--out", run]);
        assert!(out.status.success());
        let out = mpskit(dir.path(), &["dmrg", "--model", "tfim", "--n", "6", "--bond", "8", "--seed", "5", "--out", run]);
        assert!(out.status.success());
    }
    for f in ["sample.json", "sample_outcomes.csv", "dmrg.json", "dmrg_energies.csv", "dmrg_state.json"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between runs");
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "seed = 7\ntol_e = 1e-9\n").unwrap();
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_mpskit"))
            .args(args)
            .current_dir(dir.path())
            .env("MPSKIT_CONFIG", dir.path().join("run.toml"))
            .output()
            .unwrap()
    };
    assert!(run(&["state", "--name", "ghz", "--n", "4", "--out", "f"]).status.success());
    let m = read_json(&dir.path().join("f/manifest.json"));
    assert_eq!(m["config"]["seed"], 7);
    assert_eq!(m["config"]["tol_e"], 1e-9);
    assert!(run(&["state", "--name", "ghz", "--n", "4", "--seed", "3", "--out", "g"]).status.success());
    assert_eq!(read_json(&dir.path().join("g/manifest.json"))["config"]["seed"], 3);

    std::fs::write(dir.path().join("run.toml"), "tau_iso = 0.0\n").unwrap();
    assert_eq!(run(&["state", "--name", "ghz", "--n", "4"]).status.code(), Some(2));
    std::fs::write(dir.path().join("run.toml"), "seed = [\n").unwrap();
    assert_eq!(run(&["state", "--name", "ghz", "--n", "4"]).status.code(), Some(65));
}

#[test]
fn circuit_and_schedule_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("circ.json"),
        r#"{"format":"circjson v1","n_qubits":5,"gates":[{"name":"h","targets":[0]},{"name":"cnot","targets":[0,4]},{"name":"cnot","targets":[4,2]}]}"#,
    )
    .unwrap();
    assert!(mpskit(dir.path(), &["simulate", "--in", "circ.json", "--out", "sim"]).status.success());
    let r = read_json(&dir.path().join("sim/simulate.json"));
    assert_eq!(r["result"]["max_bond"], 2);
    let out = mpskit(dir.path(), &["schedule", "--in", "sim/simulate_state.json", "--mode", "no-ancilla", "--out", "sch"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = read_json(&dir.path().join("sch/schedule.json"));
    assert!(1.0 - s["replay_fidelity"].as_f64().unwrap() < 1e-9);
    assert_eq!(s["steps"].as_array().unwrap().len(), 4);
}
