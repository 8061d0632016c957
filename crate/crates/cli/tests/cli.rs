use std::path::Path;
use std::process::{Command, Output};

fn mbo(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbo")).args(args).current_dir(dir).env("MBO_THREADS", "1").output().expect("spawn mbo")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn uniform_tensions_have_unit_lower_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = mbo(&["validate-sigma", "--preset", "uniform", "--phases", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("sigma lower bound = 1\n"), "{}", stdout(&o));
}

#[test]
fn triangle_violation_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = mbo(&["validate-sigma", "--matrix", "0,1,3;1,0,1;3,1,0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn unknown_flag_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let o = mbo(&["run", "--bogus"], dir.path());
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn run_writes_manifest_and_dumps_then_renders() {
    let dir = tempfile::tempdir().unwrap();
    let o = mbo(&["run", "--shape", "disk:0.25", "--n", "256", "--h", "1e-4", "--steps", "100", "-o", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["steps"], 100);
    for step in ["step_000000", "step_000100"] {
        let bytes = std::fs::read(out.join(format!("dumps/{step}.mbof"))).unwrap();
        assert_eq!(&bytes[..4], b"MBOF");
    }
    let o = mbo(&["render", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let frame = std::fs::read(out.join("frames/step_000100.pgm")).unwrap();
    assert!(frame.starts_with(b"P5\n256 256\n"));
}

#[test]
fn single_phase_ledger_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = mbo(
        &["ledger", "--zeta", "cos-bump", "--shape", "single", "--n", "32", "--h", "1e-2", "--steps", "3", "-o", "l"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("l/ledger.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        for (name, v) in header.iter().zip(row) {
            if !matches!(*name, "n" | "t" | "flags") {
                assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{name}");
            }
        }
    }
}

#[test]
fn ledger_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |o: &'static str| {
        ["ledger", "--shape", "voronoi:3:5", "--n", "32", "--h", "4e-3", "--steps", "2", "--zeta", "cos-bump", "--k", "0", "-o", o]
    };
    for o in ["a", "b"] {
        // the ledger verdict does not matter here, only that both runs agree
        let out = mbo(&args(o), dir.path());
        assert!(matches!(out.status.code(), Some(0) | Some(3)));
    }
    let a = std::fs::read(dir.path().join("a/ledger.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/ledger.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_file_drives_a_study() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("study.toml"),
        "n = 64\nshape = \"disk:0.3\"\nsigma = \"two-phase(1)\"\nh = [4e-3, 1e-3]\nfinal_time = 8e-3\n",
    )
    .unwrap();
    let o = mbo(&["study", "--config", "study.toml", "-o", "s"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("s/study.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(dir.path().join("s/study.json").exists());
}
