//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are the field
//! names of [`RunConfig`]; term lists are comma separated or `auto`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::{BacktestPlan, ModelId};
use crate::exante::{PredictorPlan, SelectionGate, StepwiseConfig};
use crate::features::{FeatureSpec, Term};
use crate::models::{ArimaConfig, Innovation, OrderSearch, Transform};
use crate::scalar::Scalar;
use crate::series::SplitSpec;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "CALLCAST_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchKind {
    Stepwise,
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub paths: usize,
    pub train_fraction: f64,
    pub horizon: usize,
    pub step: usize,
    pub re_estimate: bool,
    pub models: Vec<ModelId>,
    pub alpha: f64,
    pub naive_cutoff: usize,
    pub innovation: Innovation,
    pub arima_search: SearchKind,
    pub arima_max_models: usize,
    pub arima_max_order: usize,
    pub stepwise_validation_fraction: f64,
    pub stepwise_horizon: usize,
    pub stepwise_stride: usize,
    pub stepwise_paths: usize,
    pub stepwise_tolerance: f64,
    pub stepwise_gate: SelectionGate,
    /// `None` selects the terms by stepwise.
    pub mlr_t_terms: Option<FeatureSpec>,
    pub mlr_w_terms: Option<FeatureSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sw = StepwiseConfig::default();
        Self {
            data: None,
            output_dir: PathBuf::from("callcast-output"),
            seed: 0,
            paths: 1000,
            train_fraction: 0.7,
            horizon: 21,
            step: 1,
            re_estimate: true,
            models: vec![ModelId::MlrT, ModelId::MlrW, ModelId::Ets, ModelId::Arima],
            alpha: 0.05,
            naive_cutoff: 5,
            innovation: Innovation::Gaussian,
            arima_search: SearchKind::Stepwise,
            arima_max_models: 94,
            arima_max_order: 5,
            stepwise_validation_fraction: sw.validation_fraction,
            stepwise_horizon: sw.horizon,
            stepwise_stride: sw.stride,
            stepwise_paths: sw.paths,
            stepwise_tolerance: sw.tolerance,
            stepwise_gate: sw.gate,
            mlr_t_terms: None,
            mlr_w_terms: None,
        }
    }
}

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid value '{value}' for {key}"))),
    }
}

fn parse_terms(value: &str) -> Result<Option<FeatureSpec>> {
    if value.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    let terms = value
        .split([',', '+'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Term::from_str)
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(FeatureSpec::from_terms(terms)?))
}

fn list<I: IntoIterator<Item = S>, S: ToString>(items: I) -> String {
    items.into_iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Defaults, then the output directory from the environment, then the
    /// file if given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = Self::default();
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                cfg.output_dir = PathBuf::from(dir);
            }
        }
        if let Some(p) = path {
            let text = fs::read_to_string(p)?;
            cfg.apply_text(&text)?;
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value', found '{line}'", i + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    /// Apply one `key=value` assignment.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, found '{pair}'")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "data" => self.data = Some(PathBuf::from(value)),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,
            "paths" => self.paths = parse(key, value)?,
            "train_fraction" => self.train_fraction = parse(key, value)?,
            "horizon" => self.horizon = parse(key, value)?,
            "step" => self.step = parse(key, value)?,
            "re_estimate" => self.re_estimate = parse_bool(key, value)?,
            "models" => {
                self.models = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(ModelId::from_str)
                    .collect::<Result<_>>()?
            }
            "alpha" => self.alpha = parse(key, value)?,
            "naive_cutoff" => self.naive_cutoff = parse(key, value)?,
            "innovation" => self.innovation = value.to_ascii_lowercase().parse()?,
            "arima_search" => {
                self.arima_search = match value.to_ascii_lowercase().as_str() {
                    "stepwise" => SearchKind::Stepwise,
                    "exhaustive" => SearchKind::Exhaustive,
                    _ => return Err(Error::Config(format!("invalid value '{value}' for {key}"))),
                }
            }
            "arima_max_models" => self.arima_max_models = parse(key, value)?,
            "arima_max_order" => self.arima_max_order = parse(key, value)?,
            "stepwise_validation_fraction" => self.stepwise_validation_fraction = parse(key, value)?,
            "stepwise_horizon" => self.stepwise_horizon = parse(key, value)?,
            "stepwise_stride" => self.stepwise_stride = parse(key, value)?,
            "stepwise_paths" => self.stepwise_paths = parse(key, value)?,
            "stepwise_tolerance" => self.stepwise_tolerance = parse(key, value)?,
            "stepwise_gate" => self.stepwise_gate = value.parse()?,
            "mlr_t_terms" => self.mlr_t_terms = parse_terms(value)?,
            "mlr_w_terms" => {
                let spec = parse_terms(value)?;
                if spec.as_ref().is_some_and(|s| s.terms().iter().any(Term::is_calls)) {
                    return Err(Error::Config("mlr_w_terms may not contain call terms".into()));
                }
                self.mlr_w_terms = spec
            }
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Every key with its current value, in the accepted file format.
    pub fn to_text(&self) -> String {
        let terms = |s: &Option<FeatureSpec>| match s {
            Some(s) => list(s.terms()),
            None => "auto".to_string(),
        };
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        if let Some(d) = &self.data {
            kv("data", d.display().to_string());
        }
        kv("output_dir", self.output_dir.display().to_string());
        kv("seed", self.seed.to_string());
        kv("paths", self.paths.to_string());
        kv("train_fraction", self.train_fraction.to_string());
        kv("horizon", self.horizon.to_string());
        kv("step", self.step.to_string());
        kv("re_estimate", self.re_estimate.to_string());
        kv("models", list(&self.models));
        kv("alpha", self.alpha.to_string());
        kv("naive_cutoff", self.naive_cutoff.to_string());
        kv("innovation", format!("{:?}", self.innovation).to_ascii_lowercase());
        kv("arima_search", format!("{:?}", self.arima_search).to_ascii_lowercase());
        kv("arima_max_models", self.arima_max_models.to_string());
        kv("arima_max_order", self.arima_max_order.to_string());
        kv("stepwise_validation_fraction", self.stepwise_validation_fraction.to_string());
        kv("stepwise_horizon", self.stepwise_horizon.to_string());
        kv("stepwise_stride", self.stepwise_stride.to_string());
        kv("stepwise_paths", self.stepwise_paths.to_string());
        kv("stepwise_tolerance", self.stepwise_tolerance.to_string());
        kv("stepwise_gate", format!("{:?}", self.stepwise_gate).to_ascii_lowercase());
        kv("mlr_t_terms", terms(&self.mlr_t_terms));
        kv("mlr_w_terms", terms(&self.mlr_w_terms));
        out
    }

    fn search(&self) -> OrderSearch {
        match self.arima_search {
            SearchKind::Stepwise => OrderSearch::Stepwise {
                max_models: self.arima_max_models,
            },
            SearchKind::Exhaustive => OrderSearch::Exhaustive {
                max_order: self.arima_max_order,
            },
        }
    }

    pub fn predictor_plan<T: Scalar>(&self) -> PredictorPlan<T> {
        let mut plan = PredictorPlan {
            naive_cutoff: self.naive_cutoff,
            ..PredictorPlan::default()
        };
        plan.calls.search = self.search();
        plan
    }

    pub fn stepwise_config(&self) -> StepwiseConfig {
        StepwiseConfig {
            validation_fraction: self.stepwise_validation_fraction,
            horizon: self.stepwise_horizon,
            stride: self.stepwise_stride,
            paths: self.stepwise_paths,
            seed: self.seed,
            tolerance: self.stepwise_tolerance,
            gate: self.stepwise_gate,
            ..StepwiseConfig::default()
        }
    }

    pub fn backtest_plan<T: Scalar>(&self) -> Result<BacktestPlan<T>> {
        if !(self.stepwise_validation_fraction > 0.0 && self.stepwise_validation_fraction < 1.0) {
            return Err(Error::Config(format!(
                "stepwise_validation_fraction must lie in (0, 1), got {}",
                self.stepwise_validation_fraction
            )));
        }
        let plan = BacktestPlan {
            split: SplitSpec::new(self.train_fraction).map_err(|e| Error::Config(e.to_string()))?,
            horizon: self.horizon,
            step: self.step,
            re_estimate: self.re_estimate,
            models: self.models.clone(),
            seed: self.seed,
            paths: self.paths,
            alpha: T::lit(self.alpha),
            innovation: self.innovation,
            predictors: self.predictor_plan(),
            arima: ArimaConfig {
                search: self.search(),
                ..ArimaConfig::default().with_transform(Transform::ShiftedLog)
            },
            stepwise: self.stepwise_config(),
            mlr_t_spec: self.mlr_t_terms.clone(),
            mlr_w_spec: self.mlr_w_terms.clone(),
        };
        plan.validate()?;
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_plan_defaults() {
        let cfg = RunConfig::default();
        let plan: BacktestPlan<f64> = cfg.backtest_plan().unwrap();
        let reference = BacktestPlan::<f64>::default();
        assert_eq!(plan.horizon, 21);
        assert_eq!(plan.paths, 1000);
        assert_eq!(plan.alpha, 0.05);
        assert_eq!(plan.split, SplitSpec::new(0.7).unwrap());
        assert_eq!(plan.predictors.naive_cutoff, 5);
        assert_eq!(plan.models, reference.models);
        assert_eq!(plan.arima.search, reference.arima.search);
        assert_eq!(plan.stepwise.gate, reference.stepwise.gate);
    }

    #[test]
    fn parses_file_text() {
        let cfg = RunConfig::parse(
            "# comment\n\nseed = 7\nmodels = MLR_T, naive\nre_estimate = false\n\
             mlr_t_terms = intercept, trend, calls_lag7\ninnovation = bootstrap\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.models, vec![ModelId::MlrT, ModelId::Naive]);
        assert!(!cfg.re_estimate);
        assert_eq!(cfg.innovation, Innovation::Bootstrap);
        assert!(cfg.mlr_t_terms.unwrap().contains(Term::CallsLag(7)));
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.set("mlr_w_terms", "intercept + weekend + cases_lag7").unwrap();
        cfg.set("arima_search", "exhaustive").unwrap();
        cfg.set("data", "x.csv").unwrap();
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(RunConfig::parse("colour = red"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("seed"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("seed = -1"), Err(Error::Config(_))));
        assert!(RunConfig::parse("mlr_w_terms = intercept, calls_lag7").is_err());
        let cfg = RunConfig::parse("alpha = 1.5").unwrap();
        assert!(cfg.backtest_plan::<f64>().is_err());
    }
}
