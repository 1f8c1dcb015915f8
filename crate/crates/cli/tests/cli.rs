use std::path::Path;
use std::process::{Command, Output};

const MINIMAL: &str = r#"{
  "problem": {"p": 2, "lambda": 1, "source": "constant",
              "domain": {"dim": 1, "extent": 1},
              "u0": {"profile": "sine", "amplitude": 0.1}, "T": 0.2},
  "discretization": {"n": 15},
  "stepper": {"scheme": "imex", "dt": 0.01},
  "output": {"samples": 10},
  "experiment": "evolve"
}"#;

fn plap(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plap"))
        .args(args)
        .current_dir(dir)
        .env_remove("PLAP_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", MINIMAL);
    let out = tmp.path().join("out");
    let res = plap(&["run", &cfg, "--out", out.to_str().unwrap()], tmp.path());
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,norm_k0p2,norm_2,norm_inf,w1p,seminorm_int_f\n"));
    assert_eq!(csv.lines().count(), 12);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["outcome"], "completed");
    assert_eq!(summary["config"]["stepper"]["scheme"], "imex");
}

#[test]
fn default_output_dir_and_env() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", MINIMAL);
    assert_eq!(plap(&["run", &cfg], tmp.path()).status.code(), Some(0));
    assert!(tmp.path().join("plap-out").join("summary.json").exists());

    let env_dir = tmp.path().join("from-env");
    let res = Command::new(env!("CARGO_BIN_EXE_plap"))
        .args(["run", &cfg])
        .current_dir(tmp.path())
        .env("PLAP_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0));
    assert!(env_dir.join("trajectory.csv").exists());
}

#[test]
fn validate_echoes_effective_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", MINIMAL);
    let res = plap(&["validate", &cfg], tmp.path());
    assert_eq!(res.status.code(), Some(0));
    let echoed = String::from_utf8(res.stdout).unwrap();
    assert!(echoed.contains("\"blowup_threshold\""));
    // the echo is itself a valid configuration that echoes identically
    let again = write_config(tmp.path(), "echo.json", &echoed);
    let res2 = plap(&["validate", &again], tmp.path());
    assert_eq!(String::from_utf8(res2.stdout).unwrap(), echoed);
}

#[test]
fn config_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(
        tmp.path(),
        "bad.json",
        &MINIMAL.replace("\"lambda\"", "\"lamda\""),
    );
    let res = plap(&["validate", &bad], tmp.path());
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("did you mean `lambda`?"), "{err}");
    assert!(err.contains("line 2"), "{err}");

    let out = tmp.path().join("out");
    let res = plap(&["run", &bad, "--out", out.to_str().unwrap()], tmp.path());
    assert_eq!(res.status.code(), Some(1));
    let summary = std::fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("config-error"));

    let p = write_config(
        tmp.path(),
        "p.json",
        &MINIMAL.replace("\"p\": 2", "\"p\": 1.5"),
    );
    let res = plap(&["validate", &p], tmp.path());
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("p must be ≥ 2"));

    assert_eq!(
        plap(&["validate", "missing.json"], tmp.path())
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn sweep_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let sweep = MINIMAL.replace(
        "\"experiment\": \"evolve\"",
        "\"experiment\": {\"kind\": \"sweep\", \"axes\": [{\"name\": \"lambda\", \"values\": [0.5, 1, 2]}]}",
    );
    let cfg = write_config(tmp.path(), "s.json", &sweep);
    let res = plap(&["sweep", &cfg, "--jobs", "2"], tmp.path());
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let csv = std::fs::read_to_string(tmp.path().join("plap-out").join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    let plain = write_config(tmp.path(), "e.json", MINIMAL);
    assert_eq!(plap(&["sweep", &plain], tmp.path()).status.code(), Some(1));
}

#[test]
fn blow_up_exit_three_and_probe_fail_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let blow = write_config(
        tmp.path(),
        "b.json",
        &MINIMAL
            .replace("\"lambda\": 1", "\"lambda\": 1e12")
            .replace("\"T\": 0.2", "\"T\": 1"),
    );
    let out = tmp.path().join("b");
    assert_eq!(
        plap(&["run", &blow, "--out", out.to_str().unwrap()], tmp.path())
            .status
            .code(),
        Some(3)
    );

    let weak = MINIMAL.replace(
        "\"experiment\": \"evolve\"",
        "\"experiment\": {\"kind\": \"weak-residual\", \"tolerance\": 1e-300}",
    );
    let cfg = write_config(tmp.path(), "w.json", &weak);
    let out = tmp.path().join("w");
    assert_eq!(
        plap(&["run", &cfg, "--out", out.to_str().unwrap()], tmp.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &MINIMAL.replace("\"constant\"", "\"quadratic\""),
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    plap(
        &["run", &cfg, "--out", a.to_str().unwrap(), "--jobs", "1"],
        tmp.path(),
    );
    plap(
        &["run", &cfg, "--out", b.to_str().unwrap(), "--jobs", "3"],
        tmp.path(),
    );
    let read = |d: &Path| std::fs::read(d.join("trajectory.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn bundled_configs_validate_and_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = tempfile::tempdir().unwrap();
    let mut seen = 0;
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let cfg = path.to_str().unwrap();
        let res = plap(&["validate", cfg], tmp.path());
        assert_eq!(
            res.status.code(),
            Some(0),
            "{name}: {}",
            String::from_utf8_lossy(&res.stderr)
        );
        let out = tmp.path().join(&name);
        let res = plap(&["run", cfg, "--out", out.to_str().unwrap()], tmp.path());
        assert_eq!(
            res.status.code(),
            Some(0),
            "{name}: {}",
            String::from_utf8_lossy(&res.stderr)
        );
        seen += 1;
    }
    assert!(seen >= 5);
}
