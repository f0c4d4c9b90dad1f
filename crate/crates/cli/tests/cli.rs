use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_branchdecay"))
        .args(args)
        .current_dir(dir)
        .env_remove("BRANCHDECAY_OUTPUT_ROOT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn coarse_table_is_informational_below_the_gate() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["table1", "--level", "0", "--shapes", "a,c", "--out", "out"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/table1.json")).unwrap()).unwrap();
    let rows = json.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["eigenvalues"].as_array().unwrap().len(), 20);
    let csv = std::fs::read_to_string(tmp.path().join("out/table1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 40);
}

#[test]
fn table_gate_fails_with_tolerance_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("gate.toml");
    std::fs::write(&cfg, "schema_version = 1\nlevel = 0\n[tolerances]\ntable1_gate_level = 0\n").unwrap();
    let o = run(tmp.path(), &["table1", "--config", cfg.to_str().unwrap(), "--shapes", "a", "--out", "out"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn empty_mode_list_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["decay", "--level", "0", "--mode-list", "", "--out", "out"]);
    assert_eq!(code(&o), 2);
    let cfg = tmp.path().join("empty.toml");
    std::fs::write(&cfg, "schema_version = 1\nmode_list = []\n").unwrap();
    let o = run(tmp.path(), &["decay", "--config", cfg.to_str().unwrap(), "--out", "out"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("mode list is empty"));
}

#[test]
fn bad_config_and_levels_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("v2.toml");
    std::fs::write(&cfg, "schema_version = 2\n").unwrap();
    assert_eq!(code(&run(tmp.path(), &["decay", "--config", cfg.to_str().unwrap()])), 2);
    assert_eq!(code(&run(tmp.path(), &["decay", "--level", "12"])), 2);
    assert_eq!(code(&run(tmp.path(), &["mesh", "--tolerance", "0.1"])), 2);
}

#[test]
fn decay_writes_profiles_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["decay", "--level", "1", "--mode-list", "1,2", "--grid", "50", "--out", "out"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = tmp.path().join("out");
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["modes"].as_array().unwrap().len(), 2);
    assert!(summary["mu"].as_f64().unwrap() > 150.0);
    let csv = std::fs::read_to_string(out.join("mode_01.csv")).unwrap();
    assert!(csv.starts_with("x0,J,bound,I"));
    assert_eq!(csv.lines().count(), 1 + 51);
    assert!(out.join("decay.svg").exists());
}

#[test]
fn solve_then_check_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(tmp.path(), &["mesh", "--level", "0", "--out", "out"])), 0);
    assert!(tmp.path().join("out/mesh_level0.txt").exists());
    assert_eq!(code(&run(tmp.path(), &["solve", "--level", "1", "--modes", "3", "--out", "out"])), 0);
    let o = run(tmp.path(), &["check", "--bundle", "out/eigen_level1.txt", "--out", "out"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("out/check.json").exists());

    // A bundle from another domain does not match the regenerated mesh.
    let o = run(tmp.path(), &["check", "--bundle", "out/eigen_level1.txt", "--shape", "c", "--out", "out"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn convergence_and_neumann_smoke() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["convergence", "--levels", "0,1", "--mode-list", "1", "--grid", "40", "--out", "out"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("out/convergence_mode_01.csv")).unwrap();
    assert!(csv.starts_with("x0,J_level0,J_level1"));

    let o = run(tmp.path(), &["convergence", "--levels", "1", "--mode-list", "1", "--grid", "40", "--out", "single"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("mode 1"));

    let o = run(tmp.path(), &["neumann", "--level", "1", "--modes", "4", "--out", "out"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/neumann.json")).unwrap()).unwrap();
    assert!(json["modes"][0]["lambda"].as_f64().unwrap().abs() < 1e-8);

    assert_eq!(code(&run(tmp.path(), &["neumann", "--shape", "e", "--level", "0", "--out", "out"])), 2);
}

#[test]
fn output_root_applies_to_relative_dirs() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("root");
    let o = Command::new(env!("CARGO_BIN_EXE_branchdecay"))
        .args(["mesh", "--level", "0", "--out", "rel"])
        .current_dir(tmp.path())
        .env("BRANCHDECAY_OUTPUT_ROOT", &root)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(root.join("rel/mesh_level0.txt").exists());
}
