use std::path::Path;
use std::process::Command;

fn wcond() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wcond"))
}

fn only_run_dir(root: &Path) -> std::path::PathBuf {
    let dirs: Vec<_> = std::fs::read_dir(root).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs[0].clone()
}

#[test]
fn list_arms() {
    let out = wcond().arg("--list-arms").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for arm in ["none", "bn", "bn_ws", "bn_w", "bn_e", "e_static", "e_reparam"] {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(arm)), "{arm}");
    }
}

#[test]
fn vds_with_config_and_seed_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("vds.json");
    std::fs::write(&cfg, r#"{"seed": 1, "experiment": {"kind": "vds", "trials": 20, "n": 4}}"#).unwrap();
    let root = tmp.path().join("runs");
    let out = wcond()
        .args(["vds", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&root)
        .args(["--seed", "9"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = only_run_dir(&root);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["kind"], "vds");
    let csv = std::fs::read_to_string(dir.join("vds.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21);
    assert!(csv.lines().nth(1).unwrap().starts_with("0,9,"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, r#"{"experiment": {"kind": "quad", "iterashuns": 5}}"#).unwrap();
    let out = wcond().arg("quad").arg("--config").arg(&cfg).arg("--out").arg(tmp.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("iterashuns"));
}

#[test]
fn subcommand_must_match_config_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("vds.json");
    std::fs::write(&cfg, r#"{"experiment": {"kind": "vds"}}"#).unwrap();
    let out = wcond().arg("quad").arg("--config").arg(&cfg).arg("--out").arg(tmp.path()).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn cond_reports_a_matrix_file() {
    let tmp = tempfile::tempdir().unwrap();
    let m = tmp.path().join("m.txt");
    std::fs::write(&m, "2 2\n3 4\n0 5\n").unwrap();
    let root = tmp.path().join("runs");
    let out = wcond().arg("cond").arg(&m).arg("--out").arg(&root).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(only_run_dir(&root).join("cond_report.csv")).unwrap();
    let row = csv.lines().find(|l| l.starts_with("row_equilibration,")).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    let (before, after): (f64, f64) = (fields[3].parse().unwrap(), fields[4].parse().unwrap());
    assert!((before - 3.0).abs() < 1e-10 && (after - 3.0).abs() < 1e-10);
}
