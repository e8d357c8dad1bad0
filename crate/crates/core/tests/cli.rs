use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn slpd(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slpd"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("running slpd")
}

fn run_config(sub: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let path = configs().join(config);
    let mut args = vec![sub, "--config", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    slpd(&args, out)
}

fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

#[test]
fn verify_default_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = slpd(&["verify"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8(out.stdout).unwrap();
    for name in ["commutator", "product", "holstein_primakoff", "oracle_equivalence", "sl2_reduction", "unitarity"] {
        assert!(table.lines().any(|l| l.starts_with(name) && l.contains("PASS")), "{table}");
    }
}

#[test]
fn verify_with_fault_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("verify", "verify_fault.json", dir.path(), &["--verbose"]);
    assert_eq!(out.status.code(), Some(1));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.lines().any(|l| l.starts_with("commutator") && l.contains("FAIL")), "{table}");
}

#[test]
fn spectrum_writes_digest_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("spectrum", "spectrum_ncut4.json", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let digest = sha256_hex(&fs::read(configs().join("spectrum_ncut4.json")).unwrap());
    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), format!("# config_sha256={digest}"));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[..3], ["block_id", "v", "E_exact"]);
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.split(',').count() == header.len()));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("spectrum_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config_sha256"], digest.as_str());
}

#[test]
fn spectrum_is_independent_of_thread_count() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run_config("spectrum", "spectrum_ncut4.json", a.path(), &["--jobs", "1"]).status.success());
    assert!(run_config("spectrum", "spectrum_ncut4.json", b.path(), &["--jobs", "3"]).status.success());
    for name in ["spectrum.csv", "spectrum_summary.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn sl2_dynamics_reports_expected_period() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("dynamics", "sl2_rabi.json", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("dynamics_report.json")).unwrap()).unwrap();
    let expected = report["expected_period"].as_f64().unwrap();
    let omega = (0.5f64.powi(2) + 4.0 * (0.8f64.powi(2) + 0.3f64.powi(2))).sqrt();
    assert!((expected - 2.0 * std::f64::consts::PI / omega).abs() < 1e-12);
    assert!(report["collapse_time"].is_null());
    let csv = fs::read_to_string(dir.path().join("signal.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("t,n3_mean,envelope"));
    assert_eq!(csv.lines().count(), 2 + 4000);
}

#[test]
fn meanfield_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("meanfield", "meanfield_k0m5.json", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("meanfield_report.json")).unwrap()).unwrap();
    assert_eq!(report["block_id"], "k0m5");
    let drift = report["energy_drift"].as_f64().unwrap();
    let e0 = report["initial_energy"].as_f64().unwrap();
    assert!(drift <= 1e-6 * e0.abs());
    let csv = fs::read_to_string(dir.path().join("meanfield.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 10_001);
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"model": {"sl2_limit": {"j": 1.0, "a": 0.0, "g": [1.0, 0.0]}}, "colour": 3}"#).unwrap();
    let out = slpd(&["spectrum", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let out = slpd(&["spectrum"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let missing = dir.path().join("nope.json");
    let out = slpd(&["dynamics", "--config", missing.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));

    // dynamics section absent
    let out = run_config("dynamics", "spectrum_ncut4.json", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));

    // starting point off the sphere
    let far = dir.path().join("far.json");
    fs::write(
        &far,
        r#"{"model": {"sl2_limit": {"j": 1.0, "a": 0.0, "g": [1.0, 0.0]}},
            "meanfield": {"p0": 3.0, "q0": 0.0, "dt": 0.01, "steps": 10}}"#,
    )
    .unwrap();
    let out = slpd(&["meanfield", "--config", far.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
