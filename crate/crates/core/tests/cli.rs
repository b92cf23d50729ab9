use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qutrit_gpt::cli::ModelFile;

const BIN: &str = env!("CARGO_BIN_EXE_qutrit-gpt");

const SMALL: &str = r#"{
  "seed": 3,
  "design": { "kind": "fiducial", "n_random": 12 },
  "ranks": [8, 9, 10],
  "rays": 100,
  "projection_dirs": 60,
  "reference_samples": 200
}"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("config.json"), SMALL).unwrap();
    dir
}

fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    walk(root)
        .into_iter()
        .map(|p| (p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()))
        .collect()
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out
}

#[test]
fn outputs_are_byte_identical_across_runs_and_threads() {
    let dir = setup();
    let out = dir.path().join("out");
    let mut snaps = Vec::new();
    for threads in ["1", "2", "1"] {
        let r = run(dir.path(), &["run", "--config", "config.json", "--out", "out", "--threads", threads]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
        snaps.push(snapshot(&out));
        fs::remove_dir_all(&out).unwrap();
    }
    assert!(snaps[0].len() > 50, "{} files", snaps[0].len());
    for s in &snaps[1..] {
        assert_eq!(s.keys().collect::<Vec<_>>(), snaps[0].keys().collect::<Vec<_>>());
        for (k, v) in s {
            assert!(v == &snaps[0][k], "{} differs", k.display());
        }
    }
}

#[test]
fn stages_rerun_from_files() {
    let dir = setup();
    let args = ["--config", "config.json", "--out", "out"];
    let stage = |name: &str| {
        let mut a = vec![name];
        a.extend(args);
        let r = run(dir.path(), &a);
        assert_eq!(code(&r), 0, "{name}: {}", String::from_utf8_lossy(&r.stderr));
        r
    };
    stage("simulate");
    stage("fit");
    stage("analyze");
    let report = stage("report");
    let text = String::from_utf8(report.stdout).unwrap();
    assert!(text.contains("<- selected") && text.contains("linear dimension ratio"), "{text}");
    let out = dir.path().join("out");
    let first = snapshot(&out);
    fs::remove_dir_all(out.join("fit")).unwrap();
    fs::remove_dir_all(out.join("analysis")).unwrap();
    fs::remove_file(out.join("report.txt")).unwrap();
    stage("fit");
    stage("analyze");
    stage("report");
    assert_eq!(snapshot(&out), first);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = setup();
    for args in [
        vec!["run", "--bogus"],
        vec!["fit", "--threads", "0", "--config", "config.json"],
        vec!["fit", "--ranks", "9-3"],
        vec!["simulate", "--epsilon", "1.5"],
        vec!["simulate", "--config", "missing.json"],
    ] {
        assert_eq!(code(&run(dir.path(), &args)), 2, "{args:?}");
    }
    fs::write(dir.path().join("typo.json"), r#"{ "sead": 1 }"#).unwrap();
    assert_eq!(code(&run(dir.path(), &["simulate", "--config", "typo.json"])), 2);
}

#[test]
fn data_errors_exit_with_three() {
    let dir = setup();
    // nothing simulated yet
    assert_eq!(code(&run(dir.path(), &["fit", "--out", "out"])), 3);
    let r = run(dir.path(), &["simulate", "--config", "config.json", "--out", "out"]);
    assert_eq!(code(&r), 0);
    let f = dir.path().join("out/train/f.csv");
    let text = fs::read_to_string(&f).unwrap();
    let truncated: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
    fs::write(&f, truncated).unwrap();
    assert_eq!(code(&run(dir.path(), &["fit", "--config", "config.json", "--out", "out"])), 3);
    fs::write(&f, text).unwrap();
    assert_eq!(code(&run(dir.path(), &["fit", "--config", "config.json", "--out", "out"])), 0);
    // gauge alignment is only defined at rank 9
    let r = run(dir.path(), &["analyze", "--config", "config.json", "--out", "out", "--rank", "8"]);
    assert_eq!(code(&r), 3);
    assert!(String::from_utf8_lossy(&r.stderr).contains("--rank"));
}

#[test]
fn numerical_failure_exits_with_four() {
    let dir = setup();
    for stage in ["simulate", "fit"] {
        assert_eq!(code(&run(dir.path(), &[stage, "--config", "config.json", "--out", "out"])), 0);
    }
    let path = dir.path().join("out/fit/model_rank_9.json");
    let mut file: ModelFile = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    // identical states leave a rank-one probability matrix
    let first = file.model.s.row(0).into_owned();
    for mut r in file.model.s.row_iter_mut() {
        r.copy_from(&first);
    }
    let broken = dir.path().join("broken.json");
    fs::write(&broken, serde_json::to_string(&file).unwrap()).unwrap();
    let r = run(dir.path(), &["analyze", "--config", "config.json", "--out", "out", "--model", "broken.json"]);
    assert_eq!(code(&r), 4, "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn help_exits_cleanly() {
    let dir = setup();
    let r = run(dir.path(), &["--help"]);
    assert_eq!(code(&r), 0);
    assert!(String::from_utf8_lossy(&r.stdout).contains("simulate"));
}
