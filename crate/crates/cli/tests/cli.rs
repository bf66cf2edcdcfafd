use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn safesim(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_safesim"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_one_row_per_day() {
    let dir = TempDir::new().unwrap();
    let o = safesim(&["run", "--policy", "none"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 366);
    assert!(csv.starts_with("day,theta_A"));
}

#[test]
fn same_seed_gives_identical_files() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let o = safesim(
            &[
                "run",
                "--policy",
                "severity",
                "--seed",
                "7",
                "--horizon",
                "60",
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |d: &TempDir| fs::read(d.path().join("trajectory.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn unknown_policy_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = safesim(&["run", "--policy", "oracle"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    for name in ["uniform", "counts", "severity", "weighted", "none"] {
        assert!(msg.contains(name), "{msg}");
    }
    assert!(!dir.path().join("trajectory.csv").exists());
}

#[test]
fn mismatched_weights_are_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = safesim(&["run", "--policy", "weighted:0.5,0.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("7 areas"));
}

#[test]
fn invalid_scenario_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    let mut scenario = safesim::scenario::serialize_scenario(&safesim::Scenario::case_study());
    scenario = scenario.replacen("\"xi_base\": 0.55", "\"xi_base\": 1.55", 1);
    assert!(scenario.contains("1.55"), "fixture edit applied");
    fs::write(&path, scenario).unwrap();
    let o = safesim(&["run", "--scenario", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("xi_base"), "{}", stderr(&o));

    fs::write(&path, "{ not json").unwrap();
    let o = safesim(
        &["table2", "--scenario", path.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn table2_single_replication_collapses_percentiles() {
    let dir = TempDir::new().unwrap();
    let o = safesim(&["table2", "--reps", "1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("table2.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("area,ahl0_p50,ahl0_p05,ahl0_p95"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 7);
    for row in &rows {
        for cell in row[1..].chunks(3) {
            assert!(cell[0] == cell[1] && cell[1] == cell[2], "{row:?}");
        }
    }
    // area D never produces AHL 5
    let d = rows.iter().find(|r| r[0] == "D").unwrap();
    assert_eq!(&d[16..19], ["0", "0", "0"]);
}

#[test]
fn compare_writes_csvs_and_charts() {
    let dir = TempDir::new().unwrap();
    let o = safesim(&["compare", "--reps", "3", "--horizon", "40"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["none", "uniform", "counts", "severity", "weighted"] {
        let csv = fs::read_to_string(dir.path().join(format!("compare_{name}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 41, "{name}");
    }
    for svg in ["expected_loss.svg", "tail_probability.svg"] {
        let text = fs::read_to_string(dir.path().join(svg)).unwrap();
        assert_eq!(text.matches("<polyline").count(), 5, "{svg}");
        assert!(text.contains("baseline"));
    }
    // without feedback the baseline is deterministic across replications
    let baseline = fs::read_to_string(dir.path().join("compare_none.csv")).unwrap();
    for line in baseline.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!((f[2], f[4]), ("0", "0"), "{line}");
    }
    let counts = fs::read_to_string(dir.path().join("severity_counts.csv")).unwrap();
    assert_eq!(counts.lines().count(), 6);
}

#[test]
fn zero_reps_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = safesim(&["compare", "--reps", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
