use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const FAST: &[&str] = &[
    "--set",
    "paths=100",
    "--set",
    "step=7",
    "--set",
    "models=MLR_T,ETS",
    "--set",
    "mlr_t_terms=intercept,trend,weekend,calls_lag7",
];

/// 120 days of deterministic counts with a weekly cycle and a call lead.
fn write_data(dir: &Path) -> PathBuf {
    let mut text = String::from("date,cases,calls\n");
    let start = chrono_like_dates();
    let mut state: u64 = 42;
    let mut calls = Vec::new();
    for t in 0..127 {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let jitter = (state >> 33) as f64 / (1u64 << 31) as f64 - 0.5;
        calls.push(300.0 + 40.0 * (t as f64 / 9.0).sin() + 10.0 * jitter);
    }
    for (t, date) in start.iter().enumerate() {
        let weekly = if t % 7 >= 5 { -0.3 } else { 0.0 };
        let log = 2.0 + 0.004 * t as f64 + 0.004 * calls[t] + weekly;
        text.push_str(&format!("{date},{},{}\n", (log.exp() - 1.0).round(), calls[t + 7].round()));
    }
    let path = dir.join("data.csv");
    fs::write(&path, text).unwrap();
    path
}

/// ISO dates from 2020-03-18, 120 days.
fn chrono_like_dates() -> Vec<String> {
    let months = [(3, 31), (4, 30), (5, 31), (6, 30), (7, 31)];
    let mut out = Vec::new();
    let mut day = 18;
    for (m, len) in months {
        while day <= len && out.len() < 120 {
            out.push(format!("2020-{m:02}-{day:02}"));
            day += 1;
        }
        day = 1;
    }
    out
}

fn callcast(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_callcast"))
        .args(args)
        .current_dir(dir)
        .env_remove("CALLCAST_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn with_fast<'a>(args: &[&'a str]) -> Vec<&'a str> {
    let mut v = args.to_vec();
    v.extend_from_slice(FAST);
    v
}

#[test]
fn backtest_writes_report_and_repeats_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_data(tmp.path());
    let data = data.to_str().unwrap();
    for out in ["a", "b"] {
        let o = callcast(&with_fast(&["backtest", "--data", data, "--output-dir", out, "--seed", "3"]), tmp.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let names = ["overall.csv", "per_horizon.csv", "records.csv", "fan_chart.svg", "winkler.svg"];
    for name in names {
        let a = fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
    let conf = fs::read_to_string(tmp.path().join("a/run.conf")).unwrap();
    assert!(conf.contains("seed = 3\n") && conf.contains("output_dir = a\n"), "{conf}");
    let overall = fs::read_to_string(tmp.path().join("a/overall.csv")).unwrap();
    assert_eq!(overall.lines().count(), 3);
}

#[test]
fn fit_then_forecast_from_saved_models() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_data(tmp.path());
    let data = data.to_str().unwrap();
    let o = callcast(&with_fast(&["fit", "--data", data, "--output-dir", "out"]), tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("out/models/mlr_t.json").exists());
    let o = callcast(
        &with_fast(&["forecast", "--data", data, "--output-dir", "out", "--horizon", "7", "--models", "out/models"]),
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("out/forecast.csv")).unwrap();
    assert!(csv.starts_with("model,h,date,mean,q025,q100,q500,q900,q975\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 7);
    assert!(csv.contains("MLR_T,7,2020-07-22,"));
}

#[test]
fn diagnose_honours_output_dir_env() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_data(tmp.path());
    let o = Command::new(env!("CARGO_BIN_EXE_callcast"))
        .args(["diagnose", "--data", data.to_str().unwrap(), "--max-lag", "10"])
        .current_dir(tmp.path())
        .env("CALLCAST_OUTPUT_DIR", "from-env")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["acf_cases.csv", "pacf_cases.csv", "ccf_calls_cases.csv"] {
        assert!(tmp.path().join("from-env").join(name).exists(), "{name}");
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let gap = tmp.path().join("gap.csv");
    fs::write(&gap, "date,cases,calls\n2020-03-18,1,2\n2020-03-20,1,2\n").unwrap();
    let o = callcast(&["backtest", "--data", gap.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2020-03-19"));

    let o = callcast(&["backtest", "--data", "data.csv", "--set", "horizon=zero"], tmp.path());
    assert_eq!(o.status.code(), Some(2));

    let o = callcast(&["backtest", "--data", "missing.csv"], tmp.path());
    assert_eq!(o.status.code(), Some(4));
}
