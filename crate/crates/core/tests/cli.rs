use std::path::Path;
use std::process::{Command, Output};

fn gandi(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gandi")).args(args).current_dir(dir).output().expect("binary runs")
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gandi(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(gandi(&["collect", "--domain", "chess"], dir.path()).status.code(), Some(1));

    std::fs::write(dir.path().join("bad.cfg"), "planner.k = 0\n").unwrap();
    let out = gandi(&["collect", "--config", "bad.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid configuration"));
}

#[test]
fn verify_writes_its_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("v.cfg"), "verify.instances = 50\nverify.lemma_instances = 10\n").unwrap();
    let out = gandi(&["verify", "--config", "v.cfg", "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 violations"));
    let run = dir.path().join("run");
    assert!(run.join("manifest_verify.json").exists());
    let csv = std::fs::read_dir(&run)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "csv"))
        .expect("verify writes a CSV report");
    assert!(std::fs::read_to_string(csv).unwrap().starts_with("# config_hash="));
}

#[test]
fn eval_rejects_the_mixture_domain() {
    let dir = tempfile::tempdir().unwrap();
    let out = gandi(&["eval", "--domain", "gmm"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_without_data_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = gandi(&["train", "--data", "missing"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn seed_flag_changes_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.cfg"), "domain = gmm\ntoy.on_target = 20\ntoy.off_target = 40\n").unwrap();
    for (seed, out) in [("1", "a"), ("2", "b")] {
        let o = gandi(&["collect", "--config", "c.cfg", "--seed", seed, "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let first_line = |p: &str| std::fs::read_to_string(dir.path().join(p)).unwrap().lines().next().unwrap().to_string();
    assert_ne!(first_line("a/on_target.csv"), first_line("b/on_target.csv"));
}
