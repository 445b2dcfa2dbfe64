use std::fs;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_aggregation");

fn write_config(dir: &tempfile::TempDir, text: &str) -> std::path::PathBuf {
    let p = dir.path().join("config.json");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn config_errors_exit_with_status_two_and_name_the_rule() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        r#"{"kernel": {"family": "ExponentialBump", "amplitude": 1.0, "beta": 0.6}}"#,
    );
    let out = Command::new(BIN)
        .args(["decay", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("‖V_x‖₁ = 1.2 ≥ A"), "{err}");

    let cfg = write_config(
        &dir,
        r#"{"grid": {"half_width": 50}, "solver": {"t_end": 100, "checkpoints": [10, 20, 50, 80, 100]}}"#,
    );
    let out = Command::new(BIN)
        .args(["decay", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("margin"));
}

#[test]
fn failing_check_gives_nonzero_exit_and_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        r#"{"validate": {"oracle": {"tolerance": 1e-12}}, "solver": {"epsilon": [1.0]}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = Command::new(BIN)
        .args(["validate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .args(["--seed", "9"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], false);
    assert_eq!(report["seed"], 9);
    let failing: Vec<&Value> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .collect();
    assert_eq!(failing.len(), 1);
    assert_eq!(failing[0]["name"], "hopf_cole_vs_oracle");
    assert_eq!(failing[0]["claim"], "lemma3.2");
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL hopf_cole_vs_oracle"));
}

#[test]
fn resolved_config_echoes_every_default() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "{}");
    let out_dir = dir.path().join("out");
    let out = Command::new(BIN)
        .args(["rescale", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let resolved: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("resolved_config.json")).unwrap()).unwrap();
    assert_eq!(resolved["scenario"], "rescale");
    assert_eq!(resolved["solver"]["cfl"], 0.4);
    assert_eq!(resolved["diagnostics"]["p_list"], serde_json::json!([1.0, 2.0, "inf"]));
    assert_eq!(
        resolved["solver"]["checkpoints"],
        serde_json::json!([5.0, 20.0, 80.0, 320.0])
    );
    let header = fs::read_to_string(out_dir.join("diagnostics.csv")).unwrap();
    assert!(header.starts_with("t,mass,min_u,l1,l2,linf,bound2,boundinf,dWR2,dWRinf,dZ1\n"));
    assert!(out_dir.join("pairings.csv").exists());
}
