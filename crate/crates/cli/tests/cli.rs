use std::path::PathBuf;
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"))
}

fn mobicell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mobicell")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_shipped_scenario() {
    let o = mobicell(&["validate", scenario("fig5_split2").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn validate_reports_unknown_field_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let text =
        std::fs::read_to_string(scenario("fig4_nosplit")).unwrap().replacen("seed = 1\n", "seed = 1\nfo0 = 1\n", 1);
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, text).unwrap();
    let o = mobicell(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("UnknownField"), "{}", stderr(&o));

    let o = mobicell(&["validate", "--json", p.to_str().unwrap()]);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let d = &report["diagnostics"][0];
    assert_eq!(d["code"], "UnknownField");
    assert_eq!(d["severity"], "error");
    assert_eq!(d["location"]["path"], "metadata.fo0");
}

#[test]
fn missing_file_is_a_runtime_failure() {
    let o = mobicell(&["run", "/nonexistent/scenario.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bap_required_stops_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("iab_direct_bap")).unwrap().replace("bap_capable = true\n", "");
    let p = dir.path().join("nobap.toml");
    std::fs::write(&p, text).unwrap();
    let o = mobicell(&["run", p.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("BapRequired"), "{}", stderr(&o));
}

#[test]
fn run_writes_artifacts_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = mobicell(&[
        "run",
        scenario("fig4_nosplit").to_str().unwrap(),
        "--seed",
        "7",
        "--end-time",
        "30",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["seed"], 7);
    assert_eq!(metrics["end_time_s"], 30.0);
    assert!(out.join("trace.log").is_file());
    assert!(out.join("series/coverage.csv").is_file());
}

#[test]
fn seed_sweep_writes_one_directory_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = mobicell(&[
        "run",
        scenario("baseline_no_mc").to_str().unwrap(),
        "--seed",
        "3",
        "--sweep-seeds",
        "3",
        "--end-time",
        "5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for k in 3..6 {
        assert!(dir.path().join(format!("seed_{k}/metrics.json")).is_file());
    }
}

#[test]
fn compare_coverage_shows_positive_delta() {
    let o = mobicell(&[
        "compare",
        scenario("baseline_no_mc").to_str().unwrap(),
        scenario("fig4_nosplit").to_str().unwrap(),
        "--metric",
        "coverage",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let row = text.lines().find(|l| l.starts_with("final_coverage")).unwrap();
    let delta: f64 = row.split_whitespace().last().unwrap().parse().unwrap();
    assert!(delta > 0.0, "{text}");
}

#[test]
fn compare_outage_and_latency() {
    for metric in ["outage", "latency"] {
        let o = mobicell(&[
            "compare",
            scenario("baseline_no_mc").to_str().unwrap(),
            scenario("fig4_nosplit").to_str().unwrap(),
            "--metric",
            metric,
        ]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(stdout(&o).lines().count(), 2);
    }
}

#[test]
fn splits_dump_table() {
    let o = mobicell(&["splits", "dump-table"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("7.2"), "{text}");
    assert!(text.contains("0.01"), "{text}");
}

#[test]
fn trace_csv_samples_positions() {
    let o =
        mobicell(&["trace-csv", scenario("fig4_nosplit").to_str().unwrap(), "--trace-id", "walker", "--step", "90"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t_s,x_m,y_m");
    assert_eq!(lines[1], "0,600,500");
    assert_eq!(lines.last().unwrap(), &"360,1300,520");
    assert_eq!(lines.len(), 6);

    let o = mobicell(&["trace-csv", scenario("fig4_nosplit").to_str().unwrap(), "--trace-id", "t9"]);
    assert_eq!(o.status.code(), Some(1));
}
