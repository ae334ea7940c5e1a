use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use callcast::eval::{
    fit_models, forecast_models, run_backtest, select_specs, BacktestPlan, FittedSet, ModelId,
    SelectedSpecs,
};
use callcast::features::{acf, ccf, pacf, write_correlogram_csv};
use callcast::io::{
    emit_report, fan_for, forecast_csv, load_model, load_spec, parse_csv, save_model, save_spec,
    svg, write_output, Dataset, RunConfig,
};
use callcast::{Error, Result};
use clap::{Parser, Subcommand};

/// Forecast daily case counts from lagged call volumes.
#[derive(Debug, Parser)]
#[command(name = "callcast", version)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set horizon=14`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Input CSV with header `date,cases,calls`.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write ACF and PACF of log cases and the calls/cases CCF.
    Diagnose {
        #[arg(long, default_value_t = 30)]
        max_lag: usize,
    },
    /// Choose regression terms by stepwise selection on the full history.
    Select,
    /// Fit all configured models on the full history and save them.
    Fit {
        /// Directory with `spec_mlr_t.json` / `spec_mlr_w.json` from `select`.
        #[arg(long)]
        specs: Option<PathBuf>,
    },
    /// Forecast past the end of the data.
    Forecast {
        #[arg(long)]
        horizon: usize,
        /// Use models saved by `fit` instead of refitting.
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        specs: Option<PathBuf>,
    },
    /// Rolling-origin evaluation with tables and charts.
    Backtest,
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    for pair in &cli.overrides {
        cfg.set_pair(pair)?;
    }
    if let Some(d) = &cli.data {
        cfg.data = Some(d.clone());
    }
    if let Some(d) = &cli.output_dir {
        cfg.output_dir = d.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn load_data(cfg: &RunConfig) -> Result<Dataset<f64>> {
    let path = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::Config("no input data; pass --data or set 'data' in the config".into()))?;
    let data = parse_csv(path)?;
    eprintln!(
        "read {} days ({} to {}) from {}",
        data.rows,
        data.cases.date_at(0),
        data.cases.end(),
        path.display()
    );
    Ok(data)
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn write(out: &Path, name: &str, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    let path = out.join(name);
    write_output(&path, bytes)?;
    written.push(path);
    Ok(())
}

fn diagnose(cfg: &RunConfig, max_lag: usize) -> Result<()> {
    let data = load_data(cfg)?;
    let logs = data.cases.log_transformed();
    let n = logs.len();
    let mut written = Vec::new();
    let mut buf = Vec::new();
    let r = acf(logs.values(), max_lag)?;
    write_correlogram_csv(&mut buf, r.iter().enumerate().skip(1).map(|(k, &v)| (k as i64, v)), n)?;
    write(&cfg.output_dir, "acf_cases.csv", &buf, &mut written)?;
    buf.clear();
    let p = pacf(logs.values(), max_lag)?;
    write_correlogram_csv(&mut buf, p.iter().enumerate().map(|(k, &v)| (k as i64 + 1, v)), n)?;
    write(&cfg.output_dir, "pacf_cases.csv", &buf, &mut written)?;
    buf.clear();
    let c = ccf(&data.calls, &logs, max_lag)?;
    write_correlogram_csv(&mut buf, c.iter().map(|(&k, &v)| (k, v)), n)?;
    write(&cfg.output_dir, "ccf_calls_cases.csv", &buf, &mut written)?;
    if let Some((k, v)) = c
        .iter()
        .filter(|(&k, _)| k < 0)
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
    {
        eprintln!("strongest lead of calls over log cases: {} days (r = {v:.3})", -k);
    }
    report_written(&written);
    Ok(())
}

fn specs_for(
    cfg: &RunConfig,
    plan: &BacktestPlan<f64>,
    data: &Dataset<f64>,
    dir: Option<&Path>,
) -> Result<SelectedSpecs<f64>> {
    let mut plan = plan.clone();
    if let Some(dir) = dir {
        for (model, file) in [(ModelId::MlrT, "spec_mlr_t.json"), (ModelId::MlrW, "spec_mlr_w.json")] {
            let path = dir.join(file);
            if plan.models.contains(&model) && path.exists() {
                let spec = load_spec(&path)?;
                match model {
                    ModelId::MlrT => plan.mlr_t_spec = Some(spec),
                    _ => plan.mlr_w_spec = Some(spec),
                }
            }
        }
    }
    let needs_selection = plan.models.iter().any(|m| match m {
        ModelId::MlrT => plan.mlr_t_spec.is_none(),
        ModelId::MlrW => plan.mlr_w_spec.is_none(),
        _ => false,
    });
    if needs_selection {
        eprintln!("selecting regression terms by stepwise (seed {})", cfg.seed);
    }
    select_specs(&data.cases, &data.calls, &plan)
}

fn select(cfg: &RunConfig) -> Result<()> {
    let data = load_data(cfg)?;
    let mut plan: BacktestPlan<f64> = cfg.backtest_plan()?;
    plan.models = vec![ModelId::MlrT, ModelId::MlrW];
    let specs = specs_for(cfg, &plan, &data, None)?;
    let mut written = Vec::new();
    for (model, spec) in [(ModelId::MlrT, &specs.mlr_t), (ModelId::MlrW, &specs.mlr_w)] {
        if let Some(spec) = spec {
            let path = cfg
                .output_dir
                .join(format!("spec_{}.json", model.to_string().to_ascii_lowercase()));
            fs::create_dir_all(&cfg.output_dir)?;
            save_spec(&path, spec)?;
            written.push(path);
            eprintln!("{model}: {spec}");
        }
    }
    for (model, trace) in &specs.traces {
        let mut buf = Vec::new();
        trace.write_trace_csv(&mut buf)?;
        let name = format!("stepwise_{}.csv", model.to_string().to_ascii_lowercase());
        write(&cfg.output_dir, &name, &buf, &mut written)?;
    }
    report_written(&written);
    Ok(())
}

fn fit(cfg: &RunConfig, spec_dir: Option<&Path>) -> Result<()> {
    let data = load_data(cfg)?;
    let plan: BacktestPlan<f64> = cfg.backtest_plan()?;
    let specs = specs_for(cfg, &plan, &data, spec_dir)?;
    let set = fit_models(&data.cases, &data.calls, &plan, &specs)?;
    let dir = cfg.output_dir.join("models");
    fs::create_dir_all(&dir)?;
    let mut written = Vec::new();
    for (name, model) in set.members() {
        let path = dir.join(format!("{name}.json"));
        save_model(&path, model)?;
        eprintln!("{name}: {} model, residual sd {:.4}", model.kind(), model.residual_sd);
        written.push(path);
    }
    write(&cfg.output_dir, "run.conf", cfg.to_text().as_bytes(), &mut written)?;
    report_written(&written);
    Ok(())
}

fn load_set(dir: &Path) -> Result<FittedSet<f64>> {
    let mut set = FittedSet::empty();
    for name in ["cases_ets", "calls_arima", "arima", "mlr_t", "mlr_w", "naive"] {
        let path = dir.join(format!("{name}.json"));
        if path.exists() {
            if let Some(slot) = set.slot(name) {
                *slot = Some(load_model(&path)?);
            }
        }
    }
    Ok(set)
}

fn forecast(cfg: &RunConfig, horizon: usize, models: Option<&Path>, spec_dir: Option<&Path>) -> Result<()> {
    if horizon == 0 {
        return Err(Error::Config("--horizon must be at least 1".into()));
    }
    let data = load_data(cfg)?;
    let plan: BacktestPlan<f64> = cfg.backtest_plan()?;
    let set = match models {
        Some(dir) => load_set(dir)?,
        None => {
            let specs = specs_for(cfg, &plan, &data, spec_dir)?;
            fit_models(&data.cases, &data.calls, &plan, &specs)?
        }
    };
    let forecasts = forecast_models(&set, &data.cases, &data.calls, &plan, horizon)?;
    let mut written = Vec::new();
    write(&cfg.output_dir, "forecast.csv", &forecast_csv(&forecasts)?, &mut written)?;
    let tail = &data.cases.values()[data.rows.saturating_sub(28)..];
    for (model, f) in &forecasts {
        let fan = fan_for(&format!("{model} forecast from {}", f.origin()), f, tail, &[]);
        let name = format!("fan_chart_{}.svg", model.to_string().to_ascii_lowercase());
        write(&cfg.output_dir, &name, svg::fan_chart(&fan).as_bytes(), &mut written)?;
    }
    report_written(&written);
    Ok(())
}

fn backtest(cfg: &RunConfig) -> Result<()> {
    let data = load_data(cfg)?;
    let plan: BacktestPlan<f64> = cfg.backtest_plan()?;
    let report = run_backtest(&data.cases, &data.calls, &plan)?;
    for (model, trace) in &report.specs.traces {
        eprintln!("{model} terms: {}", trace.selected);
    }
    if !report.failures.is_empty() {
        eprintln!("{} model fits failed; see failures.csv", report.failures.len());
    }
    let mut written = emit_report(&report, &cfg.output_dir)?;
    let conf = cfg.output_dir.join("run.conf");
    write_output(&conf, cfg.to_text().as_bytes())?;
    written.push(conf);
    report_written(&written);
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Diagnose { max_lag } => diagnose(&cfg, *max_lag),
        Command::Select => select(&cfg),
        Command::Fit { specs } => fit(&cfg, specs.as_deref()),
        Command::Forecast {
            horizon,
            models,
            specs,
        } => forecast(&cfg, *horizon, models.as_deref(), specs.as_deref()),
        Command::Backtest => backtest(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(1))
        }
    }
}
