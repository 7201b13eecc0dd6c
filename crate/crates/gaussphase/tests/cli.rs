use std::path::Path;
use std::process::{Command, Output};

use gaussphase::gaussian::GaussianState;
use gaussphase::reconstruction::ReconstructionReport;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaussphase"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("GAUSSPHASE_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gen_state_writes_a_loadable_state() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["gen-state", "--state", "tms:r=0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("state.json")).unwrap();
    let st = GaussianState::from_json(&text).unwrap();
    let expected = GaussianState::two_mode_squeezed(0.5);
    assert!((st.cov().matrix() - expected.cov().matrix()).amax() < 1e-15);
}

#[test]
fn gen_state_is_reproducible_from_the_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run(d.path(), &["gen-state", "--state", "random-mixed:n=2,nu_max=1.5", "--seed", "11"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let read = |d: &tempfile::TempDir| std::fs::read_to_string(d.path().join("state.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn exact_reconstruction_exits_cleanly_and_writes_both_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["reconstruct", "--state", "vacuum:n=2", "--strategy", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = ReconstructionReport::from_json(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report.warnings.is_empty());
    assert!((report.estimate() - GaussianState::vacuum(2).cov().matrix()).amax() < 1e-12);
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("block,row,col,estimate,truth,abs_error,sigma"));
}

#[test]
fn sampled_reconstruction_with_warnings_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["reconstruct", "--state", "random-pure:n=2", "--seed", "7", "--strategy", "1", "--shots", "1000"],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let report = ReconstructionReport::from_json(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(!report.warnings.is_empty());
}

#[test]
fn report_summarizes_a_stored_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["reconstruct", "--state", "tms:r=0.5", "--strategy", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let path = dir.path().join("report.json");
    let o = run(dir.path(), &["report", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("modes: 2"));
    assert!(text.contains("Rényi-2"));
}

#[test]
fn verify_agrees_with_the_oracle_on_two_modes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "--state", "tms:r=0.4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("max |closed form − oracle|"));
}

#[test]
fn verify_refuses_three_modes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "--state", "random-mixed:n=3", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unsupported"), "{}", stderr(&o));
}

#[test]
fn random_states_and_sampled_runs_need_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["reconstruct", "--state", "random-pure:n=2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seed"));
    let o = run(dir.path(), &["reconstruct", "--state", "vacuum:n=1", "--shots", "100"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seed"));
}

#[test]
fn malformed_state_specs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for spec in ["squeezed:r=1", "thermal:n=1", "vacuum:n=1.5", "tms:r=1,n=2"] {
        let o = run(dir.path(), &["gen-state", "--state", spec]);
        assert_eq!(o.status.code(), Some(1), "{spec} was accepted");
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_override_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"state": "thermal:n=1,nu=1.5", "strategy": 2}"#).unwrap();
    let o = run(dir.path(), &["--config", cfg.to_str().unwrap(), "reconstruct"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("1.500000"));
    let o = run(dir.path(), &["--config", cfg.to_str().unwrap(), "reconstruct", "--state", "vacuum:n=1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("0.500000"));
    assert!(!stdout(&o).contains("1.500000"));
}
