use std::path::Path;
use std::process::{Command, Output};

fn meanfield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meanfield")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn oracle_on_a_two_by_two_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.txt");
    std::fs::write(&m, "0 1\n1 0\n").unwrap();
    let o = meanfield(&["oracle", "--matrix", m.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "OPT = 0.500000");
}

#[test]
fn spherical_sk_prints_one() {
    let o = meanfield(&["parisi", "--boundary", "spherical"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "1.000000");
}

#[test]
fn exit_codes() {
    assert_eq!(code(&meanfield(&["oracle", "--bogus"])), 2);
    assert_eq!(code(&meanfield(&["oracle", "--n", "30"])), 3);
    assert_eq!(code(&meanfield(&["parisi", "--xi", "1e300:2", "--rsb", "1"])), 4);
    // A divergent schedule is reported through a failed diagnostic.
    assert_eq!(code(&meanfield(&["amp-se", "--schedule", "table", "--table=-1:-1e200,1:1e200", "--n", "200", "--steps", "6"])), 1);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"command": "oracle", "n": 4, "steps": 3}"#).unwrap();
    assert_eq!(code(&meanfield(&["run", "--config", cfg.to_str().unwrap()])), 2);
    std::fs::write(&cfg, r#"{"command": "oracle", "n": 4, "colour": 3}"#).unwrap();
    assert_eq!(code(&meanfield(&["run", "--config", cfg.to_str().unwrap()])), 2);
}

fn bp_into(dir: &Path, threads: &str) -> Vec<u8> {
    let o = Command::new(env!("CARGO_BIN_EXE_meanfield"))
        .args(["bp", "--n", "12", "--seeds", "3", "--seed", "5", "--out", dir.to_str().unwrap()])
        .env("MEANFIELD_THREADS", threads)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::read(dir.join("metrics.csv")).unwrap()
}

#[test]
fn output_is_reproducible_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let first = bp_into(&a, "1");
    assert_eq!(first, bp_into(&b, "1"));
    assert_eq!(first, bp_into(&c, "2"));
    for f in ["beliefs_rep0.csv", "beliefs_rep2.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(c.join(f)).unwrap());
    }
}

#[test]
fn run_reproduces_from_the_report_config() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let o = meanfield(&["oracle", "--n", "8", "--seeds", "2", "--beta", "1,3", "--out", first.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(first.join("report.json")).unwrap()).unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, report["config"].to_string()).unwrap();
    let second = dir.path().join("second");
    let o = meanfield(&["run", "--config", cfg.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(first.join("metrics.csv")).unwrap(), std::fs::read(second.join("metrics.csv")).unwrap());
    let again: serde_json::Value = serde_json::from_slice(&std::fs::read(second.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["input_hash"], again["input_hash"]);
}

#[test]
fn nothing_is_written_without_out() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_meanfield")).args(["oracle", "--n", "4"]).current_dir(dir.path()).output().unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}
