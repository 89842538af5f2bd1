use std::path::Path;
use std::process::{Command, Output};

fn mnl_ltr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mnl-ltr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn csv_rows(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn lists_all_policies() {
    let out = mnl_ltr(&["list-policies"]);
    assert!(out.status.success());
    let s = text(&out);
    for name in [
        "epoch-ucb",
        "epoch-ucb-w",
        "epoch-ucb-upb",
        "epoch-ucb-star-upb",
        "mnl-bandit",
        "toprank",
        "pbucb",
    ] {
        assert!(
            s.lines().any(|l| l.starts_with(name)),
            "{name} missing from\n{s}"
        );
    }
}

#[test]
fn run_writes_regret_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = mnl_ltr(&[
        "run",
        "--problem",
        "b",
        "--policies",
        "epoch-ucb,toprank",
        "--horizon",
        "200",
        "--reps",
        "2",
        "--seed",
        "5",
        "--out",
        out_dir,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let regret = csv_rows(&dir.path().join("regret.csv"));
    assert_eq!(regret[0], "problem,policy,replication,round,cum_regret");
    assert_eq!(regret.len(), 1 + 2 * 2 * 200);
    let summary = csv_rows(&dir.path().join("summary.csv"));
    assert_eq!(summary.len(), 1 + 4);
    assert!(text(&out).contains("toprank"));
}

#[test]
fn same_seed_same_bytes() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = mnl_ltr(&[
            "run",
            "--problem",
            "a",
            "--horizon",
            "300",
            "--reps",
            "2",
            "--seed",
            "9",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    for f in ["regret.csv", "summary.csv"] {
        assert_eq!(
            std::fs::read(dirs[0].path().join(f)).unwrap(),
            std::fs::read(dirs[1].path().join(f)).unwrap()
        );
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(
        &cfg,
        r#"{
            "problem": {"name": "tiny", "alpha": [0.6, 0.3, 0.1], "lambda": [1.0, 0.4]},
            "policies": ["oracle", "pbucb"],
            "horizon": 100,
            "replications": 3,
            "base_seed": 7,
            "policy": {"toprank_c": 4.0}
        }"#,
    )
    .unwrap();
    let out = mnl_ltr(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--horizon",
        "40",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let regret = csv_rows(&dir.path().join("regret.csv"));
    assert_eq!(regret.len(), 1 + 2 * 3 * 40);
    assert!(regret[1].starts_with("tiny,oracle,0,1,"));
    assert!(regret
        .iter()
        .filter(|r| r.contains(",oracle,"))
        .all(|r| r.ends_with(",0")));
}

#[test]
fn custom_problem_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("problem.json");
    std::fs::write(&p, r#"{"alpha": [0.5, 0.4, 0.3], "lambda": [1.0, 0.5]}"#).unwrap();
    let out = mnl_ltr(&[
        "run",
        "--problem",
        p.to_str().unwrap(),
        "--policies",
        "epoch-ucb",
        "--horizon",
        "50",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn bad_input_exits_with_two() {
    for args in [
        vec!["run", "--problem", "z", "--horizon", "10"],
        vec!["run", "--problem", "a"],
        vec![
            "run",
            "--problem",
            "a",
            "--horizon",
            "10",
            "--policies",
            "nope",
        ],
        vec!["run", "--problem", "a", "--horizon", "0"],
    ] {
        let out = mnl_ltr(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}

#[test]
fn theory_checks_pass() {
    let out = mnl_ltr(&["check", "--suite", "theory"]);
    assert!(out.status.success(), "{}", text(&out));
    let s = text(&out);
    assert!(s.lines().all(|l| !l.starts_with("[FAIL]")), "{s}");
    assert!(s.contains(" failed"));
}
