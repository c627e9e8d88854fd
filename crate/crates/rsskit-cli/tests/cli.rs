//! End-to-end runs of the compiled binary: output determinism, CSV round
//! trips, JSON shapes, and the exit-code contract.

use std::path::Path;
use std::process::{Command, Output};

fn rsskit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsskit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

/// A small population whose ranking variable is the outcome itself.
fn population_csv(n: usize) -> String {
    let mut text = String::from("ID,X,Y\n");
    for i in 0..n {
        // Deterministic scatter, irrational steps so values never tie.
        let y = (i as f64 * 0.7548776662466927).fract() * 10.0;
        let x = y + (i as f64 * 0.5698402909980532).fract() - 0.5;
        text.push_str(&format!("p{i},{x},{y}\n"));
    }
    text
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let args = [
        "simulate", "--H", "3", "--nsamp", "2,2,2", "--dist", "normal", "--rho", "0.8",
        "--delta", "0", "--seed", "1",
    ];
    let first = stdout(&rsskit(&args));
    let second = stdout(&rsskit(&args));
    assert_eq!(first, second);
    let mut lines = first.lines();
    assert_eq!(lines.next(), Some("rank,y"));
    assert_eq!(first.lines().count(), 7);
}

#[test]
fn sample_output_round_trips_into_test_and_design() {
    let dir = tempfile::tempdir().unwrap();
    let pop = dir.path().join("pop.csv");
    write(&pop, &population_csv(200));
    let sample = dir.path().join("sample.csv");

    let out = rsskit(&[
        "sample", "--pop", pop.to_str().unwrap(), "--H", "3", "--nsamp", "4,6,5",
        "--seed", "9", "--out", sample.to_str().unwrap(),
    ]);
    stdout(&out);
    let text = std::fs::read_to_string(&sample).unwrap();
    assert!(text.starts_with("rank,ID,y\n"));
    assert_eq!(text.lines().count(), 16);

    let tested = stdout(&rsskit(&["test", "t", "--data", sample.to_str().unwrap()]));
    let json: serde_json::Value = serde_json::from_str(&tested).unwrap();
    assert_eq!(json["method"], "t");
    assert!(json["p_value"].is_number());

    let designed = stdout(&rsskit(&["design", "--data", sample.to_str().unwrap()]));
    let json: serde_json::Value = serde_json::from_str(&designed).unwrap();
    assert_eq!(json["original"], serde_json::json!([4, 6, 5]));
    assert!(json["additions"].is_object());
}

#[test]
fn two_sample_t_reports_the_naive_degrees_of_freedom() {
    let dir = tempfile::tempdir().unwrap();
    let mut d1 = String::from("rank,y\n");
    for i in 0..18 {
        d1.push_str(&format!("{},{}\n", i % 3 + 1, (i as f64 * 0.83).sin() + 0.2 * i as f64));
    }
    let mut d2 = String::from("rank,y\n");
    for i in 0..24 {
        d2.push_str(&format!("{},{}\n", i % 3 + 1, (i as f64 * 1.27).cos() + 0.1 * i as f64));
    }
    let p1 = dir.path().join("d1.csv");
    let p2 = dir.path().join("d2.csv");
    write(&p1, &d1);
    write(&p2, &d2);
    let out = stdout(&rsskit(&[
        "test", "t", "--data", p1.to_str().unwrap(), "--data2", p2.to_str().unwrap(),
        "--mu0", "0", "--df-method", "naive",
    ]));
    assert!(out.contains("\"df\": 36"), "{out}");
}

#[test]
fn proportion_design_reports_neyman_proportions() {
    let dir = tempfile::tempdir().unwrap();
    let mut data = String::from("rank,y\n");
    let successes = [(1, 3, 12), (2, 5, 9), (3, 4, 6)];
    for &(rank, ones, total) in &successes {
        for i in 0..total {
            data.push_str(&format!("{rank},{}\n", u8::from(i < ones)));
        }
    }
    let path = dir.path().join("prop.csv");
    write(&path, &data);
    let out = stdout(&rsskit(&["design", "--data", path.to_str().unwrap(), "--prop"]));
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(json["neyman_proportion"].is_array(), "{out}");
}

#[test]
fn missing_outcomes_are_accepted_and_excluded_from_the_design() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("partial.csv");
    // Empty fields and NA both mark a missing measurement. Pending records
    // still belong to the allocation; only measured values feed the spread
    // estimates, so each stratum needs two of them.
    write(
        &path,
        "rank,ID,y\n1,a,0.5\n1,b,\n1,c,0.75\n2,d,NA\n2,e,1.25\n2,f,2.0\n",
    );
    let designed = stdout(&rsskit(&["design", "--data", path.to_str().unwrap()]));
    let json: serde_json::Value = serde_json::from_str(&designed).unwrap();
    assert_eq!(json["original"], serde_json::json!([3, 3]));
}

#[test]
fn prop_simulate_emits_binary_outcomes() {
    let out = stdout(&rsskit(&[
        "prop-simulate", "--H", "3", "--nsamp", "5,5,5", "--p", "0.4", "--seed", "3",
    ]));
    for line in out.lines().skip(1) {
        let y = line.split(',').nth(1).unwrap();
        assert!(y == "0" || y == "1", "{line}");
    }
}

#[test]
fn prop_sample_feeds_the_proportion_test() {
    let dir = tempfile::tempdir().unwrap();
    let pop = dir.path().join("traits.csv");
    let mut text = String::from("ID,X\n");
    for i in 0..240 {
        text.push_str(&format!("b{i},{}\n", u8::from(i % 5 < 2)));
    }
    write(&pop, &text);
    let sampled = dir.path().join("binary.csv");
    stdout(&rsskit(&[
        "prop-sample", "--pop", pop.to_str().unwrap(), "--H", "2", "--nsamp", "12,12",
        "--seed", "6", "--out", sampled.to_str().unwrap(),
    ]));
    let tested = stdout(&rsskit(&[
        "test", "prop", "--data", sampled.to_str().unwrap(), "--p0", "0.4",
    ]));
    let json: serde_json::Value = serde_json::from_str(&tested).unwrap();
    assert_eq!(json["method"], "prop");
    let estimate = json["estimate"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&estimate));
}

#[test]
fn one_sided_alternatives_leave_the_untested_side_open() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    let mut text = String::from("rank,y\n");
    for i in 0..12 {
        text.push_str(&format!("{},{}\n", i % 2 + 1, (i as f64 * 1.3).sin() + i as f64 * 0.05));
    }
    write(&path, &text);
    let out = stdout(&rsskit(&[
        "test", "t", "--data", path.to_str().unwrap(), "--alternative", "greater",
    ]));
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json["alternative"], "greater");
    // The upper end is unbounded and serializes as null.
    assert!(json["ci"][1].is_null(), "{out}");
    assert!(json["ci"][0].is_number());
}

#[test]
fn usage_errors_exit_2() {
    let out = rsskit(&["sample", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let out = rsskit(&["test", "w", "--data", "whatever.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let out = rsskit(&["simulate", "--H", "3", "--nsamp", "2,x,2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_errors_exit_3_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    write(&path, "rank,y\n1,2.0\nnot-a-rank,3.0\n");
    let out = rsskit(&["design", "--data", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3"), "{stderr}");

    let out = rsskit(&["test", "t", "--data", dir.path().join("absent.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn infeasible_requests_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let pop = dir.path().join("tiny.csv");
    write(&pop, &population_csv(5));
    // 3 * 9 units needed, 5 available.
    let out = rsskit(&[
        "sample", "--pop", pop.to_str().unwrap(), "--H", "3", "--nsamp", "3,3,3",
    ]);
    assert_eq!(out.status.code(), Some(4));

    // A singleton stratum leaves the variance undefined.
    let data = dir.path().join("thin.csv");
    write(&data, "rank,y\n1,1.0\n2,2.0\n2,3.0\n");
    let out = rsskit(&["test", "t", "--data", data.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn bench_emits_the_pinned_csv_header_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.json");
    write(
        &config,
        r#"{
            "scenario": "one_sample_mean",
            "replicates": 3,
            "set_size": 3,
            "allocations": [[4, 4, 4]],
            "populations": [{"synthetic": {"dist": "normal", "rho": 0.9, "size": 300}}],
            "missing_rate": 0.0,
            "seed": 5
        }"#,
    );
    let out_csv = dir.path().join("bench.csv");
    let shown = stdout(&rsskit(&[
        "bench", "--config", config.to_str().unwrap(), "--out", out_csv.to_str().unwrap(),
    ]));
    let csv = std::fs::read_to_string(&out_csv).unwrap();
    assert!(csv.starts_with("method,mean_n,coverage,mean_ci_length\n"), "{csv}");
    assert_eq!(csv.lines().count(), 4);
    // The pretty table carries the same rows, aligned.
    assert!(shown.starts_with("method"), "{shown}");
    assert!(shown.contains("original_urss") && shown.contains("srs"), "{shown}");

    let rerun = stdout(&rsskit(&["bench", "--config", config.to_str().unwrap()]));
    assert!(rerun.starts_with("method,mean_n,coverage,mean_ci_length\n"), "{rerun}");
    let rerun2 = stdout(&rsskit(&["bench", "--config", config.to_str().unwrap()]));
    assert_eq!(rerun, rerun2);
}

#[test]
fn bench_rejects_malformed_configs_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    write(&config, r#"{"scenario": "one_sample_mean", "replicates": 0}"#);
    let out = rsskit(&["bench", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn outputs_to_file_and_stdout_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--H", "2", "--nsamp", "3,3", "--seed", "11"];
    let streamed = stdout(&rsskit(&args));
    let path = dir.path().join("sim.csv");
    let mut with_out: Vec<&str> = args.to_vec();
    with_out.push("--out");
    with_out.push(path.to_str().unwrap());
    stdout(&rsskit(&with_out));
    assert_eq!(streamed, std::fs::read_to_string(&path).unwrap());
}
