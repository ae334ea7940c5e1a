//! Ex-ante regression forecasts: forecast the predictors, assemble future
//! regressor rows from observations and proxies, simulate the regression,
//! and choose terms by forward stepwise selection on out-of-sample RMSE.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{build_design, regressor_row, FeatureSpec, RegressorSource, Term};
use crate::models::{
    fit_arima_auto, fit_ets_auto, fit_naive, fit_ols, ArimaConfig, EtsConfig, FittedModel,
    ForecastDistribution, Innovation, ModelParams, MlrParams, Sampler, Transform,
};
use crate::scalar::Scalar;
use crate::series::{check_aligned, inverse_shifted_log, shifted_log_unchecked, DailySeries};

/// How future values of the regressors are produced.
#[derive(Debug, Clone)]
pub struct PredictorPlan<T> {
    /// Horizons `h < naive_cutoff` take the Naive cases forecast, later
    /// horizons the ETS one.
    pub naive_cutoff: usize,
    pub calls: ArimaConfig<T>,
    pub cases: EtsConfig<T>,
}

impl<T: Scalar> Default for PredictorPlan<T> {
    fn default() -> Self {
        Self {
            naive_cutoff: 5,
            calls: ArimaConfig::default(),
            cases: EtsConfig::default().with_transform(Transform::ShiftedLog),
        }
    }
}

impl<T: Scalar> PredictorPlan<T> {
    pub fn validate(&self) -> Result<()> {
        if self.naive_cutoff == 0 {
            return Err(Error::Config("naive_cutoff must be at least 1".into()));
        }
        Ok(())
    }
}

/// Point forecasts of both predictors on the count scale, index `h - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Proxies<T> {
    pub calls: Vec<T>,
    pub cases: Vec<T>,
}

impl<T: Scalar> Proxies<T> {
    pub fn horizon(&self) -> usize {
        self.calls.len().min(self.cases.len())
    }
}

/// Fit the predictor models on the history and forecast `horizon` days.
pub fn forecast_predictors<T: Scalar>(
    cases: &DailySeries<T>,
    calls: &DailySeries<T>,
    plan: &PredictorPlan<T>,
    horizon: usize,
) -> Result<Proxies<T>> {
    check_aligned(cases, calls)?;
    let cases_model = fit_ets_auto(cases, &plan.cases)?;
    let calls_model = fit_arima_auto(calls, &plan.calls)?;
    proxies_from_models(cases, &cases_model, &calls_model, plan, horizon)
}

/// Proxies from already fitted predictor models: `cases_model` is the ETS
/// fit on cases and `calls_model` the ARIMA fit on calls, both ending on
/// the last day of `cases`.
pub fn proxies_from_models<T: Scalar>(
    cases: &DailySeries<T>,
    cases_model: &FittedModel<T>,
    calls_model: &FittedModel<T>,
    plan: &PredictorPlan<T>,
    horizon: usize,
) -> Result<Proxies<T>> {
    plan.validate()?;
    if horizon == 0 {
        return Err(Error::Data("predictor horizon must be at least 1".into()));
    }
    let end = cases.end();
    if cases_model.training_meta.end_date != end || calls_model.training_meta.end_date != end {
        return Err(Error::Alignment(format!(
            "predictor models must end on {end}"
        )));
    }
    let naive = fit_naive(cases)?.point_forecast(horizon)?;
    let ets = cases_model.point_forecast(horizon)?;
    let cases = (1..=horizon)
        .map(|h| {
            if h < plan.naive_cutoff {
                naive[h - 1]
            } else {
                ets[h - 1]
            }
        })
        .collect();
    Ok(Proxies {
        calls: calls_model.point_forecast(horizon)?,
        cases,
    })
}

struct FutureSource<'a, T> {
    cases: &'a [T],
    calls: &'a [T],
    proxies: &'a Proxies<T>,
}

impl<T: Scalar> FutureSource<'_, T> {
    fn lookup(observed: &[T], proxy: &[T], t: usize) -> Option<T> {
        match observed.get(t) {
            Some(&v) => Some(v),
            None => proxy.get(t - observed.len()).copied(),
        }
    }
}

impl<T: Scalar> RegressorSource<T> for FutureSource<'_, T> {
    fn log_cases(&self, t: usize) -> Option<T> {
        Self::lookup(self.cases, &self.proxies.cases, t).map(shifted_log_unchecked)
    }

    fn calls(&self, t: usize) -> Option<T> {
        Self::lookup(self.calls, &self.proxies.calls, t)
    }
}

/// Regressor row for the day `h` steps after the last observation. Lags
/// that land on or before the origin use observations, later ones the
/// proxies.
pub fn assemble_future_row<T: Scalar>(
    h: usize,
    cases: &DailySeries<T>,
    calls: &DailySeries<T>,
    proxies: &Proxies<T>,
    spec: &FeatureSpec,
) -> Result<Vec<T>> {
    check_aligned(cases, calls)?;
    if h == 0 {
        return Err(Error::Assembly("future rows start at h = 1".into()));
    }
    let src = FutureSource {
        cases: cases.values(),
        calls: calls.values(),
        proxies,
    };
    let t = cases.len() - 1 + h;
    regressor_row(&spec.terms(), t, cases.start(), &src)
}

/// Monte Carlo settings shared by the simulators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simulation {
    pub horizon: usize,
    pub paths: usize,
    pub seed: u64,
    pub innovation: Innovation,
}

fn mlr_params<T: Scalar>(model: &FittedModel<T>) -> Result<&MlrParams<T>> {
    match &model.params {
        ModelParams::Mlr(p) => Ok(p),
        _ => Err(Error::Fit(format!(
            "expected a regression model, got {}",
            model.kind()
        ))),
    }
}

/// Log-scale means of the regression for `h = 1..=horizon`.
pub fn mlr_log_means<T: Scalar>(
    model: &FittedModel<T>,
    cases: &DailySeries<T>,
    calls: &DailySeries<T>,
    proxies: &Proxies<T>,
    horizon: usize,
) -> Result<Vec<T>> {
    let params = mlr_params(model)?;
    let spec = params.spec();
    (1..=horizon)
        .map(|h| Ok(params.predict_row(&assemble_future_row(h, cases, calls, proxies, &spec)?)))
        .collect()
}

/// Simulate the regression forward from the end of the history. Each path
/// adds an innovation to the log-scale mean, back-transforms and clamps.
pub fn forecast_mlr<T: Scalar>(
    model: &FittedModel<T>,
    cases: &DailySeries<T>,
    calls: &DailySeries<T>,
    proxies: &Proxies<T>,
    sim: &Simulation,
) -> Result<ForecastDistribution<T>> {
    crate::models::check_forecast_args(sim.horizon, sim.paths)?;
    let means = mlr_log_means(model, cases, calls, proxies, sim.horizon)?;
    let sampler = Sampler::new(sim.innovation, model.residual_sd, &model.residuals);
    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
    let paths = (0..sim.paths)
        .map(|_| {
            means
                .iter()
                .map(|&m| inverse_shifted_log(m + sampler.draw(&mut rng)))
                .collect()
        })
        .collect();
    ForecastDistribution::from_paths(cases.end(), paths)
}

/// Fit the regression for `spec` on the history.
pub fn fit_mlr<T: Scalar>(
    cases: &DailySeries<T>,
    calls: &DailySeries<T>,
    spec: &FeatureSpec,
) -> Result<FittedModel<T>> {
    fit_ols(&build_design(cases, calls, spec)?)
}

/// Settings for [`stepwise_select`].
#[derive(Debug, Clone)]
pub struct StepwiseConfig {
    /// Share of the window (at its end) used for validation origins.
    pub validation_fraction: f64,
    pub horizon: usize,
    /// Days between validation origins.
    pub stride: usize,
    pub paths: usize,
    pub seed: u64,
    /// Minimum RMSE improvement for a term to be added.
    pub tolerance: f64,
    /// Terms that may be added; the intercept is always included.
    pub candidates: Vec<Term>,
    pub gate: SelectionGate,
}

/// Extra condition a term must pass before stepwise may add it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionGate {
    /// Validation RMSE alone decides.
    None,
    /// The term must also lower the in-sample BIC of the regression, with
    /// every candidate fitted on the same rows. Without this, forward
    /// selection keeps adding lags that only fit validation noise.
    #[default]
    Bic,
}

impl std::str::FromStr for SelectionGate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(SelectionGate::None),
            "bic" => Ok(SelectionGate::Bic),
            _ => Err(Error::Config(format!("unknown stepwise gate '{s}'"))),
        }
    }
}

impl Default for StepwiseConfig {
    fn default() -> Self {
        Self {
            validation_fraction: 0.2,
            horizon: 21,
            stride: 7,
            paths: 200,
            seed: 0,
            tolerance: 1e-9,
            candidates: FeatureSpec::all_candidates(),
            gate: SelectionGate::Bic,
        }
    }
}

impl StepwiseConfig {
    /// The candidate set without any call terms.
    pub fn without_calls(mut self) -> Self {
        self.candidates.retain(|t| !t.is_calls());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepwiseStep<T> {
    pub term: Term,
    pub rmse: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepwiseResult<T> {
    pub selected: FeatureSpec,
    /// Validation RMSE of the intercept-only model.
    pub baseline_rmse: T,
    pub trace: Vec<StepwiseStep<T>>,
}

impl<T: Scalar> StepwiseResult<T> {
    /// CSV with header `round,term,rmse`; round 0 is the intercept.
    pub fn write_trace_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["round", "term", "rmse"]).map_err(io)?;
        w.write_record(["0", "intercept", &self.baseline_rmse.to_string()])
            .map_err(io)?;
        for (i, s) in self.trace.iter().enumerate() {
            w.write_record([(i + 1).to_string(), s.term.to_string(), s.rmse.to_string()])
                .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct ValidationOrigin<T> {
    cases: DailySeries<T>,
    calls: DailySeries<T>,
    proxies: Proxies<T>,
    actual: Vec<T>,
    seed: u64,
}

/// Pooled RMSE of path-mean forecasts over all validation targets, or
/// `None` if the spec cannot be fitted at some origin.
fn validation_rmse<T: Scalar>(
    origins: &[ValidationOrigin<T>],
    spec: &FeatureSpec,
    cfg: &StepwiseConfig,
) -> Option<T> {
    let mut sse = T::zero();
    let mut count = 0usize;
    for o in origins {
        let model = fit_mlr(&o.cases, &o.calls, spec).ok()?;
        let sim = Simulation {
            horizon: o.actual.len(),
            paths: cfg.paths,
            seed: o.seed,
            innovation: Innovation::Gaussian,
        };
        let f = forecast_mlr(&model, &o.cases, &o.calls, &o.proxies, &sim).ok()?;
        for (h, &y) in o.actual.iter().enumerate() {
            let e = f.mean(h + 1) - y;
            sse = sse + e * e;
            count += 1;
        }
    }
    let rmse = (sse / T::of(count)).sqrt();
    rmse.is_finite().then_some(rmse)
}

/// BIC of the regression fitted on rows `first..`, so that specs with
/// different maximum lags are compared on the same observations.
fn common_sample_bic<T: Scalar>(
    cases: &DailySeries<T>,
    calls: &DailySeries<T>,
    spec: &FeatureSpec,
    first: usize,
) -> Option<T> {
    let from = first.checked_sub(spec.max_lag())?;
    let c = cases.slice(from, cases.len()).ok()?;
    let k = calls.slice(from, calls.len()).ok()?;
    let m = fit_mlr(&c, &k, spec).ok()?;
    let n = T::of(m.training_meta.n_obs);
    let params = T::of(spec.terms().len() + 1);
    m.training_meta.aic.map(|aic| aic + params * (n.ln() - T::lit(2.0)))
}

/// Forward selection from the intercept: each round adds the candidate that
/// lowers validation RMSE most, stopping when no addition improves it by
/// more than the tolerance. Ties go to the earlier term in column order.
/// With [`SelectionGate::Bic`] only terms that also lower the in-sample BIC
/// are considered.
pub fn stepwise_select<T: Scalar>(
    cases: &DailySeries<T>,
    calls: &DailySeries<T>,
    plan: &PredictorPlan<T>,
    cfg: &StepwiseConfig,
) -> Result<StepwiseResult<T>> {
    check_aligned(cases, calls)?;
    if cfg.horizon == 0 || cfg.stride == 0 || cfg.paths == 0 {
        return Err(Error::Config(
            "stepwise horizon, stride and paths must be positive".into(),
        ));
    }
    let n = cases.len();
    let val_len = ((n as f64) * cfg.validation_fraction).floor() as usize;
    if val_len == 0 || val_len >= n {
        return Err(Error::Data(format!(
            "no validation window in a series of length {n}"
        )));
    }
    let mut origins = Vec::new();
    let mut o = n - val_len - 1;
    while o + 1 < n {
        let h = cfg.horizon.min(n - 1 - o);
        let hist_cases = cases.head(o + 1)?;
        let hist_calls = calls.head(o + 1)?;
        if let Ok(proxies) = forecast_predictors(&hist_cases, &hist_calls, plan, h) {
            origins.push(ValidationOrigin {
                actual: cases.values()[o + 1..=o + h].to_vec(),
                cases: hist_cases,
                calls: hist_calls,
                proxies,
                seed: crate::eval::derive_seed(cfg.seed, o as u64, 0),
            });
        }
        o += cfg.stride;
    }
    if origins.is_empty() {
        return Err(Error::Data("no usable validation origin for stepwise selection".into()));
    }

    let mut selected = FeatureSpec::intercept_only();
    let baseline_rmse = validation_rmse(&origins, &selected, cfg)
        .ok_or_else(|| Error::Fit("intercept-only model failed on validation origins".into()))?;
    let mut current = baseline_rmse;
    let mut trace = Vec::new();
    let tol = T::lit(cfg.tolerance);
    let mut candidates = cfg.candidates.clone();
    candidates.sort();
    candidates.dedup();
    let first = candidates
        .iter()
        .map(|t| match *t {
            Term::CasesLag(k) | Term::CallsLag(k) => k,
            _ => 0,
        })
        .max()
        .unwrap_or(0);
    let gated = cfg.gate == SelectionGate::Bic;
    let mut current_bic = if gated {
        common_sample_bic(cases, calls, &selected, first)
    } else {
        None
    };
    loop {
        let remaining: Vec<Term> = candidates
            .iter()
            .copied()
            .filter(|&t| !selected.contains(t))
            .collect();
        let scores: Vec<Option<(T, Option<T>)>> = remaining
            .par_iter()
            .map(|&t| {
                let spec = selected.with(t).ok()?;
                if gated {
                    let bic = common_sample_bic(cases, calls, &spec, first)?;
                    if current_bic.is_some_and(|c| !(bic < c)) {
                        return None;
                    }
                    Some((validation_rmse(&origins, &spec, cfg)?, Some(bic)))
                } else {
                    Some((validation_rmse(&origins, &spec, cfg)?, None))
                }
            })
            .collect();
        let best = remaining
            .iter()
            .zip(&scores)
            .filter_map(|(&t, s)| s.map(|s| (t, s)))
            .fold(None, |acc: Option<(Term, (T, Option<T>))>, (t, s)| match acc {
                Some((_, b)) if !(s.0 < b.0) => acc,
                _ => Some((t, s)),
            });
        match best {
            Some((term, (rmse, bic))) if current - rmse > tol => {
                selected.insert(term)?;
                trace.push(StepwiseStep { term, rmse });
                current = rmse;
                current_bic = bic;
            }
            _ => break,
        }
    }
    Ok(StepwiseResult {
        selected,
        baseline_rmse,
        trace,
    })
}
