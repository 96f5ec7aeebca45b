use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oracle-lab"))
        .args(args)
        .env_remove("ORACLE_LAB_SEED")
        .output()
        .unwrap()
}

fn preset(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(name).to_string_lossy().into_owned()
}

#[test]
fn diagonalize_writes_a_verifiable_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("d.jsonl");
    let out = lab(&["diagonalize", "--n", "3", "--s", "1", "--json", trace.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("n,s,class_size,length,bits"));
    let check = lab(&["verify-trace", trace.to_str().unwrap()]);
    assert!(check.status.success());
    assert!(String::from_utf8_lossy(&check.stdout).contains("pass"));
}

#[test]
fn infeasible_diagonalization_exits_nonzero_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("d.jsonl");
    let out = lab(&["diagonalize", "--n", "2", "--s", "1", "--json", trace.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.lines().last().unwrap().contains("\"record\":\"error\""));
}

#[test]
fn learn_from_hex_and_from_circuit_file() {
    let out = lab(&["learn", "--mode", "nplog", "--n", "2", "--f", "6"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("and.circ");
    fs::write(&file, "inputs 2\ng1 AND x1 x2\noutput g1\n").unwrap();
    let out = lab(&["learn", "--mode", "adaptive", "--theta", "1/2", "--f", file.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",adaptive,"));
}

#[test]
fn adversary_pp_mode_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("pp.jsonl");
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"n": 1, "rho": 3, "machines": [{"family": "oddmaxbit", "offset": 0, "stride": 1}]}"#).unwrap();
    let out = lab(&["adversary-pp", "--config", cfg.to_str().unwrap(), "--trace", trace.to_str().unwrap(), "--mode", "xor"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&trace).unwrap().lines().next().unwrap().contains("\"mode\":\"xor\""));
}

#[test]
fn adversary_par_runs_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let exp: serde_json::Value = serde_json::from_str(&fs::read_to_string(preset("par-chain.json")).unwrap()).unwrap();
    fs::write(&cfg, exp["config"].to_string()).unwrap();
    let out = lab(&["adversary-par", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_configuration_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"n": 1, "rho": 3, "machines": [], "surplus": true}"#).unwrap();
    assert_eq!(lab(&["adversary-pp", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(lab(&["learn", "--n", "2", "--f", "zz"]).status.code(), Some(2));
}

#[test]
fn tampered_trace_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    assert!(lab(&["run", "--preset", &preset("pp-column-sum.json"), "--trace", trace.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(&trace).unwrap().replace("\"certified\":true", "\"certified\":false");
    fs::write(&trace, text).unwrap();
    assert_eq!(lab(&["verify-trace", trace.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("c.jsonl");
    let out = Command::new(env!("CARGO_BIN_EXE_oracle-lab"))
        .args(["count", "--m", "4", "--threshold", "8", "--planted", "2", "--trials", "3", "--trace"])
        .arg(&trace)
        .env("ORACLE_LAB_SEED", "77")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&trace).unwrap().lines().next().unwrap().contains("\"seed\":77"));
}
