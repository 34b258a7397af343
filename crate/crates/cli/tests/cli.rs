use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn arbfront(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arbfront"))
        .args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Hourly rows for the given dates, each with a cheap night and an expensive evening.
fn price_csv(dates: &[&str], price: impl Fn(usize, usize) -> f64) -> String {
    let mut s = String::from("timestamp,price\n");
    for (d, date) in dates.iter().enumerate() {
        for h in 0..24 {
            s += &format!("{date}T{h:02}:00,{}\n", price(d, h));
        }
    }
    s
}

fn synth(dir: &Path, first: i32, last: i32) -> PathBuf {
    let path = dir.join("prices.csv");
    let out = arbfront(
        dir,
        &["synth", "--data", path.to_str().unwrap(), "--first-year", &first.to_string(), "--last-year", &last.to_string()],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    path
}

#[test]
fn ingest_two_days() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    fs::write(&csv, price_csv(&["2021-03-01", "2021-03-02"], |_, h| 20.0 + h as f64)).unwrap();
    let out = arbfront(dir.path(), &["ingest", "--data", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("days kept: 2, days dropped: 0"));
    let cache = read_json(dir.path().join("out/days.json"));
    assert_eq!(cache["days"].as_array().unwrap().len(), 2);
    assert_eq!(cache["days"][1]["date"], "2021-03-02");
    assert_eq!(cache["diagnostics"]["days_kept"], 2);
}

#[test]
fn missing_price_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.csv");
    let out = arbfront(dir.path(), &["ingest", "--data", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("nowhere.csv"), "{}", stderr(&out));
}

#[test]
fn malformed_row_is_reported_by_number() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    fs::write(&csv, "timestamp,price\n2021-01-01T00:00,10\n2021-01-01T01:00,ten\n").unwrap();
    let out = arbfront(dir.path(), &["ingest", "--data", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("row 2"), "{}", stderr(&out));
}

#[test]
fn daylight_saving_day_is_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    let text: String = price_csv(&["2021-03-13", "2021-03-14", "2021-03-15"], |_, h| 30.0 + h as f64)
        .lines()
        .filter(|l| !l.starts_with("2021-03-14T02"))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(&csv, text).unwrap();
    let out = arbfront(dir.path(), &["ingest", "--data", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let cache = read_json(dir.path().join("out/days.json"));
    assert_eq!(cache["diagnostics"]["days_dropped"], 1);
    assert_eq!(cache["days"].as_array().unwrap().len(), 2);
}

#[test]
fn default_run_is_six_by_six_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth(dir.path(), 2020, 2022);
    let data = csv.to_str().unwrap();
    let flags = ["--data", data, "--train-years", "2020-2021", "--test-years", "2022"];
    let run = |cmd: &str| {
        let out = arbfront(dir.path(), &[&[cmd][..], &flags[..]].concat());
        assert_eq!(code(&out), 0, "{cmd}: {}", stderr(&out));
    };
    let files = ["days.json", "models.json", "frontier.csv", "report.json", "plot_frontier.py"];
    let snapshot = || files.map(|f| fs::read(dir.path().join("out").join(f)).unwrap());

    for cmd in ["ingest", "calibrate", "frontier"] {
        run(cmd);
    }
    let first = snapshot();
    for cmd in ["ingest", "calibrate", "frontier"] {
        run(cmd);
    }
    assert!(first == snapshot(), "rerun changed an output file");

    let bundle = read_json(dir.path().join("out/models.json"));
    assert_eq!(bundle["models"].as_array().unwrap().len(), 6);
    let r_max = bundle["calibrations"].as_array().unwrap().iter().filter(|c| c["map"]["kind"] == "raw").count();
    assert_eq!(r_max, 4);

    let csv = fs::read_to_string(dir.path().join("out/frontier.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 36);
    for strategy in rows.chunks(6) {
        let wc: Vec<f64> = strategy.iter().map(|r| r[2].parse().unwrap()).collect();
        assert!(wc.windows(2).all(|w| w[1] <= w[0] + 1e-6), "{}: {wc:?}", strategy[0][0]);
    }
}

#[test]
fn one_strategy_one_budget_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth(dir.path(), 2021, 2022);
    let data = csv.to_str().unwrap();
    let flags = ["--data", data, "--train-years", "2021", "--test-years", "2022"];
    for cmd in ["ingest", "calibrate"] {
        assert_eq!(code(&arbfront(dir.path(), &[&[cmd][..], &flags[..]].concat())), 0);
    }
    let out = arbfront(dir.path(), &[&["frontier", "--strategies", "ellip-cov", "--gamma-grid", "0.4"][..], &flags[..]].concat());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("out/frontier.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("EllipCov,0.4,"));
}

#[test]
fn constant_prices_calibrate_as_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("flat.csv");
    let dates: Vec<String> = (1..=20).map(|d| format!("2021-01-{d:02}")).collect();
    let dates: Vec<&str> = dates.iter().map(String::as_str).collect();
    fs::write(&csv, price_csv(&dates, |_, _| 40.0)).unwrap();
    let flags = ["--data", csv.to_str().unwrap(), "--train-years", "2021", "--test-years", "2022"];
    assert_eq!(code(&arbfront(dir.path(), &[&["ingest"][..], &flags[..]].concat())), 0);
    let out = arbfront(dir.path(), &[&["calibrate"][..], &flags[..]].concat());
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let bundle = read_json(dir.path().join("out/models.json"));
    let flags: Vec<bool> =
        bundle["calibrations"].as_array().unwrap().iter().map(|c| c["degenerate"].as_bool().unwrap()).collect();
    assert_eq!(flags, [true, true, true, true, false, false]);
}

#[test]
fn frontier_needs_a_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth(dir.path(), 2022, 2022);
    assert_eq!(code(&arbfront(dir.path(), &["ingest", "--data", csv.to_str().unwrap()])), 0);
    let out = arbfront(dir.path(), &["frontier"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("calibrate"), "{}", stderr(&out));
}

#[test]
fn solver_failure_names_the_cell() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth(dir.path(), 2021, 2022);
    let flags = ["--data", csv.to_str().unwrap(), "--train-years", "2021", "--test-years", "2022"];
    for cmd in ["ingest", "calibrate"] {
        assert_eq!(code(&arbfront(dir.path(), &[&[cmd][..], &flags[..]].concat())), 0);
    }
    // A tolerance no solver can meet: every cell is flagged by the residual check.
    let path = dir.path().join("out/models.json");
    let mut bundle = read_json(path.clone());
    bundle["solver_tol"] = Value::from(1e-30);
    fs::write(&path, serde_json::to_string_pretty(&bundle).unwrap()).unwrap();
    let out = arbfront(dir.path(), &[&["frontier", "--strategies", "poly-mean-std", "--gamma-grid", "0.2"][..], &flags[..]].concat());
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    assert!(stderr(&out).contains("PolyMeanStd at gamma=0.2"), "{}", stderr(&out));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 2021, 2022);
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"data_path": "prices.csv", "train_years": [2021], "test_years": [2022], "gamma_grid": [0.0, 0.5]}"#,
    )
    .unwrap();
    let run = |cmd: &str, extra: &[&str]| {
        let out = arbfront(dir.path(), &[&[cmd, "--config", cfg.to_str().unwrap()][..], extra].concat());
        assert_eq!(code(&out), 0, "{cmd}: {}", stderr(&out));
    };
    run("ingest", &[]);
    run("calibrate", &[]);
    run("frontier", &["--strategies", "chance-normal"]);
    let csv = fs::read_to_string(dir.path().join("out/frontier.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let out = arbfront(dir.path(), &["frontier", "--config", cfg.to_str().unwrap(), "--power", "1.0"]);
    assert_eq!(code(&out), 2, "storage change must force recalibration");
    let out = arbfront(dir.path(), &["frontier", "--config", cfg.to_str().unwrap(), "--gamma-grid", "0.5,0.2"]);
    assert_eq!(code(&out), 2);
}
