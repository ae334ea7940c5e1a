//! Fit every configured model on a full history and forecast past its end.

use super::backtest::{derive_seed, BacktestPlan, ModelId, SelectedSpecs};
use crate::error::{Error, Result};
use crate::exante::{fit_mlr, forecast_mlr, proxies_from_models, Simulation};
use crate::models::{fit_arima_auto, fit_ets_auto, fit_naive, FittedModel, ForecastDistribution};
use crate::scalar::Scalar;
use crate::series::{check_aligned, DailySeries};

/// Models fitted on one history. The cases ETS is both the ETS benchmark
/// and the cases predictor for the regressions.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedSet<T> {
    pub cases_ets: Option<FittedModel<T>>,
    pub calls_arima: Option<FittedModel<T>>,
    pub arima: Option<FittedModel<T>>,
    pub mlr_t: Option<FittedModel<T>>,
    pub mlr_w: Option<FittedModel<T>>,
    pub naive: Option<FittedModel<T>>,
}

impl<T> FittedSet<T> {
    /// `(file stem, model)` for every fitted member.
    pub fn members(&self) -> Vec<(&'static str, &FittedModel<T>)> {
        [
            ("cases_ets", &self.cases_ets),
            ("calls_arima", &self.calls_arima),
            ("arima", &self.arima),
            ("mlr_t", &self.mlr_t),
            ("mlr_w", &self.mlr_w),
            ("naive", &self.naive),
        ]
        .into_iter()
        .filter_map(|(name, m)| m.as_ref().map(|m| (name, m)))
        .collect()
    }

    /// Mutable slot for a member name used by [`FittedSet::members`].
    pub fn slot(&mut self, name: &str) -> Option<&mut Option<FittedModel<T>>> {
        match name {
            "cases_ets" => Some(&mut self.cases_ets),
            "calls_arima" => Some(&mut self.calls_arima),
            "arima" => Some(&mut self.arima),
            "mlr_t" => Some(&mut self.mlr_t),
            "mlr_w" => Some(&mut self.mlr_w),
            "naive" => Some(&mut self.naive),
            _ => None,
        }
    }

    pub fn empty() -> Self {
        Self {
            cases_ets: None,
            calls_arima: None,
            arima: None,
            mlr_t: None,
            mlr_w: None,
            naive: None,
        }
    }
}

/// Fit what `plan.models` needs on the whole history. Regression terms come
/// from `specs`.
pub fn fit_models<T: Scalar>(
    cases: &DailySeries<T>,
    calls: &DailySeries<T>,
    plan: &BacktestPlan<T>,
    specs: &SelectedSpecs<T>,
) -> Result<FittedSet<T>> {
    plan.validate()?;
    check_aligned(cases, calls)?;
    let has = |m: ModelId| plan.models.contains(&m);
    let mlr = plan.models.iter().any(|m| m.is_regression());
    let regression = |m: ModelId| -> Result<Option<FittedModel<T>>> {
        if !has(m) {
            return Ok(None);
        }
        let spec = specs
            .get(m)
            .ok_or_else(|| Error::Spec(format!("no regression terms for {m}")))?;
        fit_mlr(cases, calls, spec).map(Some)
    };
    Ok(FittedSet {
        cases_ets: (mlr || has(ModelId::Ets))
            .then(|| fit_ets_auto(cases, &plan.predictors.cases))
            .transpose()?,
        calls_arima: mlr
            .then(|| fit_arima_auto(calls, &plan.predictors.calls))
            .transpose()?,
        arima: has(ModelId::Arima)
            .then(|| fit_arima_auto(cases, &plan.arima))
            .transpose()?,
        mlr_t: regression(ModelId::MlrT)?,
        mlr_w: regression(ModelId::MlrW)?,
        naive: has(ModelId::Naive).then(|| fit_naive(cases)).transpose()?,
    })
}

/// Simulate `horizon` days past the end of the history for every planned
/// model. Seeds match the backtest's at an origin on the last day.
pub fn forecast_models<T: Scalar>(
    set: &FittedSet<T>,
    cases: &DailySeries<T>,
    calls: &DailySeries<T>,
    plan: &BacktestPlan<T>,
    horizon: usize,
) -> Result<Vec<(ModelId, ForecastDistribution<T>)>> {
    check_aligned(cases, calls)?;
    let end = cases.end();
    fn need<'a, T: Scalar>(
        m: &'a Option<FittedModel<T>>,
        what: &str,
        end: chrono::NaiveDate,
    ) -> Result<&'a FittedModel<T>> {
        let m = m
            .as_ref()
            .ok_or_else(|| Error::Fit(format!("{what} model is missing")))?;
        if m.training_meta.end_date != end {
            return Err(Error::Alignment(format!(
                "{what} model was fitted on data ending {}, history ends {end}",
                m.training_meta.end_date
            )));
        }
        Ok(m)
    }
    let origin = cases.len() as u64 - 1;
    let mut out = Vec::with_capacity(plan.models.len());
    for &model in &plan.models {
        let sim = Simulation {
            horizon,
            paths: plan.paths,
            seed: derive_seed(plan.seed, origin, model.stream()),
            innovation: plan.innovation,
        };
        let simulate = |m: &FittedModel<T>| m.forecast(horizon, sim.paths, sim.seed, sim.innovation);
        let f = match model {
            ModelId::Naive => simulate(need(&set.naive, "Naive", end)?)?,
            ModelId::Ets => simulate(need(&set.cases_ets, "ETS", end)?)?,
            ModelId::Arima => simulate(need(&set.arima, "ARIMA", end)?)?,
            ModelId::MlrT | ModelId::MlrW => {
                let fit = if model == ModelId::MlrT { &set.mlr_t } else { &set.mlr_w };
                let m = need(fit, &model.to_string(), end)?;
                let proxies = proxies_from_models(
                    cases,
                    need(&set.cases_ets, "cases ETS", end)?,
                    need(&set.calls_arima, "calls ARIMA", end)?,
                    &plan.predictors,
                    horizon,
                )?;
                forecast_mlr(m, cases, calls, &proxies, &sim)?
            }
        };
        out.push((model, f));
    }
    Ok(out)
}
