use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::{BacktestReport, Metric, ModelId};
use crate::io::svg::{fan_chart, line_chart, Fan, Line};
use crate::models::ForecastDistribution;
use crate::scalar::Scalar;

/// Days of observed history drawn before the fan chart origin.
const FAN_HISTORY: usize = 28;

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<PathBuf> {
    fs::write(path, bytes)?;
    Ok(path.to_path_buf())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// `model,ME,RMSE,MAE,Winkler,Percentile,CRPS`, one row per model.
pub fn overall_csv<T: Scalar>(report: &BacktestReport<T>) -> Result<Vec<u8>> {
    let mut header = vec!["model".to_string()];
    header.extend(Metric::ALL.iter().map(Metric::to_string));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = report.models.iter().map(|&m| {
        let mut row = vec![m.to_string()];
        row.extend(Metric::ALL.iter().map(|&k| {
            report
                .overall_score(m, k)
                .map(|v| v.to_string())
                .unwrap_or_default()
        }));
        row
    });
    csv_bytes(&header, rows)
}

/// `model,metric,h,score,count` in model, metric, horizon order.
pub fn per_horizon_csv<T: Scalar>(report: &BacktestReport<T>) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for &m in &report.models {
        for &k in &Metric::ALL {
            for s in report.horizon_scores(m, k) {
                rows.push(vec![
                    m.to_string(),
                    k.to_string(),
                    s.h.to_string(),
                    s.score.to_string(),
                    s.count.to_string(),
                ]);
            }
        }
    }
    csv_bytes(&["model", "metric", "h", "score", "count"], rows)
}

/// Every scored forecast.
pub fn records_csv<T: Scalar>(report: &BacktestReport<T>) -> Result<Vec<u8>> {
    let rows = report.records.iter().map(|r| {
        vec![
            r.model.clone(),
            r.origin_date.to_string(),
            r.h.to_string(),
            r.actual.to_string(),
            r.mean.to_string(),
            r.median.to_string(),
            r.lower.to_string(),
            r.upper.to_string(),
        ]
    });
    csv_bytes(
        &["model", "origin_date", "h", "actual", "mean", "median", "lower", "upper"],
        rows,
    )
}

const FORECAST_LEVELS: [(&str, f64); 5] = [
    ("q025", 0.025),
    ("q100", 0.1),
    ("q500", 0.5),
    ("q900", 0.9),
    ("q975", 0.975),
];

/// Mean and selected quantiles of forecast distributions, one row per
/// model and horizon.
pub fn forecast_csv<T: Scalar>(forecasts: &[(ModelId, ForecastDistribution<T>)]) -> Result<Vec<u8>> {
    let mut header = vec!["model", "h", "date", "mean"];
    header.extend(FORECAST_LEVELS.iter().map(|l| l.0));
    let mut rows = Vec::new();
    for (m, f) in forecasts {
        for h in 1..=f.horizon() {
            let mut row = vec![m.to_string(), h.to_string(), f.date(h).to_string(), f.mean(h).to_string()];
            row.extend(
                FORECAST_LEVELS
                    .iter()
                    .map(|&(_, p)| f.quantile(T::lit(p), h).to_string()),
            );
            rows.push(row);
        }
    }
    csv_bytes(&header, rows)
}

fn failures_csv<T: Scalar>(report: &BacktestReport<T>) -> Result<Vec<u8>> {
    let rows = report
        .failures
        .iter()
        .map(|f| vec![f.model.to_string(), f.origin.to_string(), f.message.clone()]);
    csv_bytes(&["model", "origin", "message"], rows)
}

fn metric_lines<T: Scalar>(report: &BacktestReport<T>, metrics: &[Metric]) -> Vec<Line> {
    let mut lines = Vec::new();
    for &m in &report.models {
        for &k in metrics {
            let label = if metrics.len() > 1 {
                format!("{m} {k}")
            } else {
                m.to_string()
            };
            lines.push(Line {
                label,
                points: report
                    .horizon_scores(m, k)
                    .iter()
                    .map(|s| (s.h as f64, s.score.to_f64_lossy()))
                    .collect(),
            });
        }
    }
    lines
}

/// Bands from a forecast distribution, with optional observed context.
pub fn fan_for<T: Scalar>(
    title: &str,
    f: &ForecastDistribution<T>,
    history: &[T],
    actual: &[T],
) -> Fan {
    let q = |p: f64, h: usize| f.quantile(T::lit(p), h).to_f64_lossy();
    let hs = 1..=f.horizon();
    Fan {
        title: title.to_string(),
        history: history.iter().map(|v| v.to_f64_lossy()).collect(),
        actual: actual.iter().map(|v| v.to_f64_lossy()).collect(),
        median: hs.clone().map(|h| q(0.5, h)).collect(),
        inner: hs.clone().map(|h| (q(0.1, h), q(0.9, h))).collect(),
        outer: hs.map(|h| (q(0.025, h), q(0.975, h))).collect(),
        inner_label: "80% interval".into(),
        outer_label: "95% interval".into(),
    }
}

/// Fan chart of the latest full-horizon forecast of `model`, with observed
/// values recovered from the one-step records of earlier origins.
fn latest_fan<T: Scalar>(report: &BacktestReport<T>, model: ModelId) -> Option<Fan> {
    let (_, f) = report.latest.iter().find(|(m, _)| *m == model)?;
    let origin = report
        .records
        .iter()
        .find(|r| r.model == model.to_string() && r.origin_date == f.origin())
        .map(|r| r.origin)?;
    let name = model.to_string();
    let mut history: Vec<(usize, T)> = report
        .records
        .iter()
        .filter(|r| r.model == name && r.h == 1 && r.origin < origin && r.origin + FAN_HISTORY >= origin)
        .map(|r| (r.origin, r.actual))
        .collect();
    history.sort_by_key(|p| p.0);
    // Contiguous run ending at the origin date (actual of origin - 1 at h=1).
    let mut run = Vec::new();
    let mut expect = origin;
    for &(o, v) in history.iter().rev() {
        if o + 1 != expect {
            break;
        }
        run.push(v);
        expect = o;
    }
    run.reverse();
    let mut actual: Vec<(usize, T)> = report
        .records
        .iter()
        .filter(|r| r.model == name && r.origin == origin)
        .map(|r| (r.h, r.actual))
        .collect();
    actual.sort_by_key(|p| p.0);
    let actual: Vec<T> = actual.into_iter().map(|p| p.1).collect();
    Some(fan_for(
        &format!("{model} forecast from {}", f.origin()),
        f,
        &run,
        &actual,
    ))
}

/// Write tables and charts for a backtest into `outdir`, creating it if
/// needed. Returns the files written.
pub fn emit_report<T: Scalar>(report: &BacktestReport<T>, outdir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if report.models.is_empty() || report.records.is_empty() {
        return Err(Error::Data("backtest report has no scored forecasts".into()));
    }
    let dir = outdir.as_ref();
    fs::create_dir_all(dir)?;
    let mut written = vec![
        write_file(&dir.join("overall.csv"), &overall_csv(report)?)?,
        write_file(&dir.join("per_horizon.csv"), &per_horizon_csv(report)?)?,
        write_file(&dir.join("records.csv"), &records_csv(report)?)?,
        write_file(&dir.join("latest_forecast.csv"), &forecast_csv(&report.latest)?)?,
        write_file(&dir.join("failures.csv"), &failures_csv(report)?)?,
    ];
    for (model, trace) in &report.specs.traces {
        let path = dir.join(format!("stepwise_{}.csv", model.to_string().to_ascii_lowercase()));
        let mut buf = Vec::new();
        trace.write_trace_csv(&mut buf)?;
        written.push(write_file(&path, &buf)?);
    }
    let charts: [(&str, &str, &[Metric]); 4] = [
        ("point_metrics.svg", "Point forecast accuracy", &[Metric::Me, Metric::Mae, Metric::Rmse]),
        ("winkler.svg", "Winkler score", &[Metric::Winkler]),
        ("percentile.svg", "Percentile score", &[Metric::Percentile]),
        ("crps.svg", "CRPS", &[Metric::Crps]),
    ];
    for (file, title, metrics) in charts {
        let svg = line_chart(title, "horizon (days)", "score", &metric_lines(report, metrics));
        written.push(write_file(&dir.join(file), svg.as_bytes())?);
    }
    if let Some(fan) = report.models.iter().find_map(|&m| latest_fan(report, m)) {
        written.push(write_file(&dir.join("fan_chart.svg"), fan_chart(&fan).as_bytes())?);
    }
    Ok(written)
}

/// Write `bytes` to `path`, creating parent directories.
pub fn write_output(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}
