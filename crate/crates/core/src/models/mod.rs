//! The four estimators (Naive, MLR, ETS, ARIMA) behind one fitted-model
//! type, each producing Monte Carlo forecast distributions.

pub mod arima;
mod distribution;
pub mod ets;
pub mod naive;
pub mod ols;

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::{inverse_shifted_log, shifted_log_unchecked};

pub use arima::{fit_arima_auto, ArimaConfig, ArimaOrder, ArimaParams, OrderSearch};
pub use distribution::ForecastDistribution;
pub use ets::{fit_ets_auto, EtsConfig, EtsParams, EtsSeason, EtsTrend};
pub use naive::{fit_naive, NaiveParams};
pub use ols::{fit_ols, ols_solve, MlrParams};

/// Scale on which a model is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    None,
    /// `ln(y + 1)`, inverted by `max(exp(x) - 1, 0)`.
    ShiftedLog,
}

impl Transform {
    #[inline]
    pub fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            Transform::None => v,
            Transform::ShiftedLog => shifted_log_unchecked(v),
        }
    }

    /// Back to the count scale, clamped at zero.
    #[inline]
    pub fn invert<T: Scalar>(self, x: T) -> T {
        match self {
            Transform::None => x.max(T::zero()),
            Transform::ShiftedLog => inverse_shifted_log(x),
        }
    }
}

/// How future innovations are drawn when simulating paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Innovation {
    /// Normal with the model's residual standard deviation.
    #[default]
    Gaussian,
    /// Resample in-sample residuals with replacement.
    Bootstrap,
}

impl FromStr for Innovation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Innovation::Gaussian),
            "bootstrap" => Ok(Innovation::Bootstrap),
            _ => Err(Error::Config(format!("unknown innovation sampler '{s}'"))),
        }
    }
}

pub(crate) struct Sampler<'a, T> {
    kind: Innovation,
    sd: T,
    residuals: &'a [T],
}

impl<'a, T: Scalar> Sampler<'a, T> {
    pub(crate) fn new(kind: Innovation, sd: T, residuals: &'a [T]) -> Self {
        Self {
            kind,
            sd,
            residuals,
        }
    }

    #[inline]
    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match self.kind {
            Innovation::Bootstrap if !self.residuals.is_empty() => {
                self.residuals[rng.random_range(0..self.residuals.len())]
            }
            _ => {
                if self.sd == T::zero() {
                    T::zero()
                } else {
                    self.sd * T::standard_normal(rng)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Naive,
    Mlr,
    Ets,
    Arima,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Naive => "naive",
            ModelKind::Mlr => "mlr",
            ModelKind::Ets => "ets",
            ModelKind::Arima => "arima",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
#[serde(bound = "T: Scalar")]
pub enum ModelParams<T> {
    Naive(NaiveParams<T>),
    Mlr(MlrParams<T>),
    Ets(EtsParams<T>),
    Arima(ArimaParams<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrainingMeta<T> {
    /// Observations used in estimation.
    pub n_obs: usize,
    /// Last training date; forecasts start the day after.
    pub end_date: NaiveDate,
    pub transform: Transform,
    pub aic: Option<T>,
    pub aicc: Option<T>,
}

/// A fitted estimator with residual statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FittedModel<T> {
    #[serde(flatten)]
    pub params: ModelParams<T>,
    pub residual_sd: T,
    /// In-sample one-step errors on the estimation scale.
    pub residuals: Vec<T>,
    pub training_meta: TrainingMeta<T>,
}

impl<T: Scalar> FittedModel<T> {
    pub fn kind(&self) -> ModelKind {
        match self.params {
            ModelParams::Naive(_) => ModelKind::Naive,
            ModelParams::Mlr(_) => ModelKind::Mlr,
            ModelParams::Ets(_) => ModelKind::Ets,
            ModelParams::Arima(_) => ModelKind::Arima,
        }
    }

    /// Simulate `paths` future trajectories of length `horizon`.
    ///
    /// Regression models need future regressors; use
    /// [`crate::exante::forecast_mlr`] for those.
    pub fn forecast(
        &self,
        horizon: usize,
        paths: usize,
        seed: u64,
        innovation: Innovation,
    ) -> Result<ForecastDistribution<T>> {
        check_forecast_args(horizon, paths)?;
        match &self.params {
            ModelParams::Naive(p) => Ok(naive::forecast(self, p, horizon, paths, seed, innovation)),
            ModelParams::Ets(p) => Ok(ets::forecast(self, p, horizon, paths, seed, innovation)),
            ModelParams::Arima(p) => Ok(arima::forecast(self, p, horizon, paths, seed, innovation)),
            ModelParams::Mlr(_) => Err(Error::Fit(
                "regression forecasts need future regressors; use exante::forecast_mlr".into(),
            )),
        }
    }

    /// Deterministic point forecast on the count scale (zero future
    /// innovations, then back-transformed).
    pub fn point_forecast(&self, horizon: usize) -> Result<Vec<T>> {
        let t = self.training_meta.transform;
        let raw = match &self.params {
            ModelParams::Naive(p) => vec![p.last; horizon],
            ModelParams::Ets(p) => ets::point_forecast(p, horizon),
            ModelParams::Arima(p) => arima::point_forecast(p, horizon),
            ModelParams::Mlr(_) => {
                return Err(Error::Fit(
                    "regression forecasts need future regressors".into(),
                ))
            }
        };
        Ok(raw.into_iter().map(|v| t.invert(v)).collect())
    }
}

pub(crate) fn check_forecast_args(horizon: usize, paths: usize) -> Result<()> {
    if horizon == 0 || paths == 0 {
        return Err(Error::Data(format!(
            "forecast needs horizon >= 1 and paths >= 1, got {horizon} and {paths}"
        )));
    }
    Ok(())
}

/// Gaussian information criteria from a sum of squared errors.
/// `k` counts every estimated parameter including the variance.
pub(crate) fn information_criteria<T: Scalar>(sse: T, n: usize, k: usize) -> (Option<T>, Option<T>) {
    let nf = T::of(n);
    let sigma2 = sse / nf;
    let two_pi = T::lit(std::f64::consts::TAU);
    let m2ll = nf * ((two_pi * sigma2).ln() + T::one());
    let aic = m2ll + T::lit(2.0) * T::of(k);
    let aicc = if n > k + 1 {
        Some(aic + T::lit(2.0) * T::of(k * (k + 1)) / T::of(n - k - 1))
    } else {
        None
    };
    let finite = |v: T| if v.is_finite() { Some(v) } else { None };
    (finite(aic), aicc.and_then(finite))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_round_trip_and_clamp() {
        assert_eq!(Transform::None.invert(-3.0f64), 0.0);
        let v = Transform::ShiftedLog.apply(9.0f64);
        assert!((Transform::ShiftedLog.invert(v) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn information_criteria_match_closed_form() {
        let (aic, aicc) = information_criteria(50.0f64, 100, 3);
        let m2ll = 100.0 * ((std::f64::consts::TAU * 0.5).ln() + 1.0);
        assert!((aic.unwrap() - (m2ll + 6.0)).abs() < 1e-10);
        assert!((aicc.unwrap() - (m2ll + 6.0 + 24.0 / 96.0)).abs() < 1e-10);
        let (aic, _) = information_criteria(0.0f64, 10, 2);
        assert!(aic.is_none());
    }
}
