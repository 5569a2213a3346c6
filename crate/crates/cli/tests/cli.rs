use std::path::Path;
use std::process::{Command, Output};

use forelimb_core::io::read_bundle;
use forelimb_core::model::default_forelimb;
use forelimb_core::oracle::driven_double_pendulum;

fn forelimb(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forelimb"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn error_kind(out: &Output) -> String {
    let v: serde_json::Value = serde_json::from_slice(&out.stderr)
        .unwrap_or_else(|_| panic!("stderr is not JSON: {:?}", out.stderr));
    v["error"]["kind"].as_str().expect("kind").to_string()
}

#[test]
fn missing_force_file_is_input_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    assert!(forelimb(&["synth", "--trot", "--out", "t"], dir.path())
        .status
        .success());
    std::fs::remove_file(dir.path().join("t/grf.csv")).unwrap();
    let out = forelimb(&["analyze", "--bundle", "t", "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "input");
    let names: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(names, vec![std::ffi::OsString::from("t")]);
}

#[test]
fn synth_is_reproducible_and_readable() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = forelimb(
            &["synth", "--trot", "--seed", "9", "--out", out],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [
        "markers.csv",
        "grf.csv",
        "trial.toml",
        "truth.csv",
        "scenario.toml",
    ] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
    let bundle = read_bundle(&dir.path().join("a"), &default_forelimb(), 1.0).unwrap();
    assert_eq!(bundle.markers.len(), 86);
}

#[test]
fn scenario_file_synthesizes_with_its_chain() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("s.toml"),
        driven_double_pendulum().to_toml_string(),
    )
    .unwrap();
    let o = forelimb(
        &["synth", "--scenario", "s.toml", "--out", "sim"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("sim/chain.toml").exists());
}

#[test]
fn flipped_convention_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let out = forelimb(
        &[
            "verify",
            "--filter",
            "convention",
            "--flip-sign",
            "carpus:beta",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_kind(&out), "verification");
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL convention-table"));

    let ok = forelimb(&["verify", "--filter", "convention"], dir.path());
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS convention-table"));
}

#[test]
fn unmatched_filter_runs_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = forelimb(&["verify", "--filter", "no-such-check"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 checks"));
}

#[test]
fn unstable_step_is_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = driven_double_pendulum();
    s.dt = 0.05;
    for d in s.torques.as_mut().unwrap().values_mut() {
        d.stiffness = 1e5;
    }
    std::fs::write(dir.path().join("s.toml"), s.to_toml_string()).unwrap();
    let out = forelimb(
        &["synth", "--scenario", "s.toml", "--out", "sim"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_kind(&out), "numerical");
    assert!(!dir.path().join("sim").exists());
}

#[test]
fn manifest_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        forelimb(&["synth", "--trot", "--out", "data/t"], dir.path())
            .status
            .success()
    );
    std::fs::write(
        dir.path().join("data/run.toml"),
        "grid_points = 51\n\n[[trials]]\nid = \"one\"\nbundle = \"t\"\n",
    )
    .unwrap();
    let o = forelimb(
        &["analyze", "--manifest", "data/run.toml", "--out", "res"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("res/trials/one/energy.csv").exists());
    let recorded = std::fs::read_to_string(dir.path().join("res/manifest.toml")).unwrap();
    assert!(recorded.contains("grid_points = 51"));

    let both = forelimb(
        &[
            "analyze",
            "--manifest",
            "data/run.toml",
            "--bundle",
            "data/t",
            "--out",
            "x",
        ],
        dir.path(),
    );
    assert_eq!(both.status.code(), Some(2));
}
