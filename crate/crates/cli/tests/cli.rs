use std::path::PathBuf;
use std::process::{Command, Output};

fn bariance(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bariance"))
        .args(args)
        .env_remove("BARIANCE_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// CSV body lines (comments stripped) split into cells.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bariance-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn worked_example() {
    let o = bariance(&["estimate", "1", "3", "5", "7", "9", "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0], ["statistic", "value"]);
    let value = |name: &str| -> f64 {
        rows.iter().find(|r| r[0] == name).unwrap()[1]
            .parse()
            .unwrap()
    };
    assert_eq!(value("mean"), 5.0);
    assert_eq!(value("biased"), 8.0);
    assert_eq!(value("unbiased"), 10.0);
    assert_eq!(value("bariance-naive"), 20.0);
    assert_eq!(value("bariance-opt"), 20.0);
}

#[test]
fn generalized_denominators_and_negative_values() {
    let o = bariance(&[
        "estimate", "-1", "-3", "-5", "-7", "-9", "--a", "4,5,8", "--format", "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let est = doc["data"]["estimates"].as_array().unwrap();
    let get = |k: &str| {
        est.iter().find(|e| e["statistic"] == k).unwrap()["value"]
            .as_f64()
            .unwrap()
    };
    assert_eq!(get("mean"), -5.0);
    assert_eq!(get("generalized:4"), 10.0);
    assert_eq!(get("generalized:5"), 8.0);
    assert_eq!(get("generalized:8"), 5.0);
    assert_eq!(doc["metadata"]["command"], "estimate");
}

#[test]
fn parse_error_names_token() {
    let o = bariance(&["estimate", "1 abc"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("token 2"), "{}", stderr(&o));
}

#[test]
fn parse_error_names_line() {
    let dir = scratch_dir("parse");
    let path = dir.join("values.txt");
    std::fs::write(&path, "# header\n1 2\n3\nx\n").unwrap();
    let o = bariance(&["estimate", "--file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn file_input() {
    let dir = scratch_dir("file");
    let path = dir.join("values.txt");
    std::fs::write(&path, "1\n3, 5\n7 9\n").unwrap();
    let o = bariance(&[
        "estimate",
        "--file",
        path.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("bariance-opt,2.0000000000000000e1"));
}

#[test]
fn config_errors_exit_two() {
    for args in [
        &["simulate", "--tau", "1"][..],
        &["bench", "--trials", "1"],
        &["mse-sweep", "--grid", ""],
        &["simulate", "--dist", "gamma:-1,2"],
        &["estimate", "5"],
        &["theory", "--n", "1"],
        &["simulate", "--estimators", "bogus"],
        &["simulate", "--no-such-flag"],
    ] {
        let o = bariance(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(o.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn numerical_error_exits_three() {
    // estimator and sample size are confounded, so the design is singular
    let dir = scratch_dir("numerical");
    let path = dir.join("bench.csv");
    let mut csv = String::from("estimator,n,trial,elapsed_ns,checksum\n");
    for trial in 0..3 {
        csv.push_str(&format!("unbiased,10,{trial},100,1\n"));
        csv.push_str(&format!("bariance-opt,20,{trial},90,1\n"));
    }
    std::fs::write(&path, csv).unwrap();
    let o = bariance(&["regress", "--input", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn simulate_is_deterministic() {
    let args = [
        "simulate",
        "--n",
        "20",
        "--tau",
        "300",
        "--resamples",
        "50",
        "--format",
        "csv",
    ];
    let a = bariance(&args);
    let b = bariance(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("# identity (bariance-naive): variance ratio 4"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0].len(), 13);
}

#[test]
fn sweep_and_equivalence_are_deterministic() {
    for args in [
        &[
            "mse-sweep",
            "--tau",
            "500",
            "--resamples",
            "20",
            "--format",
            "json",
        ][..],
        &[
            "equivalence",
            "--tau",
            "100",
            "--n-list",
            "10,20",
            "--format",
            "csv",
        ],
    ] {
        let a = bariance(args);
        let b = bariance(args);
        assert!(a.status.success(), "{args:?}: {}", stderr(&a));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn sweep_flags_named_denominators() {
    let o = bariance(&[
        "mse-sweep",
        "--tau",
        "200",
        "--resamples",
        "10",
        "--format",
        "csv",
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    let flag = |a: &str| rows.iter().find(|r| r[0] == a).unwrap()[1].clone();
    assert_eq!(flag("4"), "n-1");
    assert_eq!(flag("5"), "n");
    assert_eq!(flag("6"), "n+1");
    assert_eq!(flag("3.5"), "");
    assert_eq!(rows.len(), 12);
}

#[test]
fn regress_accepts_bench_output() {
    let dir = scratch_dir("regress");
    let o = bariance(&[
        "bench",
        "--n-list",
        "10,20,40",
        "--trials",
        "3",
        "--sims",
        "20",
        "--format",
        "csv",
        "--output",
        dir.join("bench.csv").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.join("bench.csv")).unwrap();
    assert!(text.starts_with("# bariance"));
    assert!(text.contains("# environment:"));
    let rows = csv_rows(&text);
    assert_eq!(
        rows[0],
        ["estimator", "n", "trial", "elapsed_ns", "checksum"]
    );
    assert_eq!(rows.len(), 1 + 4 * 3 * 3);

    let o = bariance(&[
        "regress",
        "--input",
        dir.join("bench.csv").to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let terms: Vec<String> = csv_rows(&stdout(&o))
        .into_iter()
        .skip(1)
        .map(|r| r[0].clone())
        .collect();
    assert_eq!(
        terms,
        [
            "intercept",
            "estimator:unbiased",
            "estimator:bariance-naive",
            "estimator:bariance-opt",
            "n:20",
            "n:40"
        ]
    );
}

#[test]
fn regress_reads_stdin() {
    use std::io::Write;
    use std::process::Stdio;
    let bench = bariance(&[
        "bench", "--n-list", "10,20", "--trials", "2", "--sims", "10", "--format", "csv",
    ]);
    let mut child = Command::new(env!("CARGO_BIN_EXE_bariance"))
        .args(["regress", "--format", "json"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(&bench.stdout)
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["data"]["n_obs"], 16);
}

#[test]
fn output_dir_override() {
    let dir = scratch_dir("outdir");
    let o = Command::new(env!("CARGO_BIN_EXE_bariance"))
        .args(["theory", "--n", "5", "--output", "nested/theory.txt"])
        .env("BARIANCE_OUTPUT_DIR", &dir)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(dir.join("nested/theory.txt")).unwrap();
    assert!(text.contains("# bariance"));
}

#[test]
fn theory_outputs() {
    let o = bariance(&["theory", "--n", "5", "--sigma2", "10", "--format", "csv"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0], ["a", "bias", "bias_sq", "variance", "mse"]);
    let mse: Vec<f64> = rows[1..].iter().map(|r| r[4].parse().unwrap()).collect();
    assert_eq!(mse[0], 50.0);
    assert_eq!(mse[1], 36.0);
    assert!((mse[2] - 100.0 / 3.0).abs() < 1e-12);

    let o = bariance(&["theory", "--n", "5", "--optimal", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["data"]["closed_form"], 6.0);
    assert!((doc["data"]["numeric"].as_f64().unwrap() - 6.0).abs() < 1e-6);

    let o = bariance(&["theory", "--n", "100", "--bariance", "--format", "csv"]);
    let rows = csv_rows(&stdout(&o));
    let variance = |i: usize| rows[i][3].parse::<f64>().unwrap();
    assert!((variance(2) / variance(1) - 4.0).abs() < 1e-12);
}

#[test]
fn bench_summary_layout() {
    let o = bariance(&[
        "bench", "--n-list", "10,20", "--trials", "2", "--sims", "10", "--layout", "summary",
        "--format", "csv",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows = csv_rows(&text);
    assert_eq!(
        rows[0],
        [
            "n",
            "biased_s",
            "unbiased_s",
            "bariance-naive_s",
            "bariance-opt_s",
            "fastest"
        ]
    );
    assert_eq!(rows.len(), 3);
    assert!(text.contains("# paired unbiased - bariance-opt n=10"));
    assert!(text.contains("# scaling unavailable"));
}

#[test]
fn constant_sample_has_zero_dispersion() {
    let o = bariance(&["estimate", "7 7", "--format", "csv"]);
    assert!(o.status.success());
    for row in csv_rows(&stdout(&o)).iter().skip(1) {
        let v: f64 = row[1].parse().unwrap();
        assert_eq!(v, if row[0] == "mean" { 7.0 } else { 0.0 }, "{row:?}");
    }
}

#[test]
fn single_denominator_sweep() {
    let o = bariance(&["mse-sweep", "--grid", "4", "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    let bias_sq: f64 = rows[1][2].parse().unwrap();
    assert!(bias_sq < 0.5, "{bias_sq}");
}
