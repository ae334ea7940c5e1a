//! Additive-error exponential smoothing state space models with automatic
//! selection over trend {none, additive, damped} x season {none, additive}.
//!
//! Recursions (`m` = season length, `phi = 1` without damping):
//!
//! ```text
//! yhat_t = l_{t-1} + phi b_{t-1} + s_{t-m}
//! e_t    = y_t - yhat_t
//! l_t    = l_{t-1} + phi b_{t-1} + alpha e_t
//! b_t    = phi b_{t-1} + beta e_t
//! s_t    = s_{t-m} + gamma e_t
//! ```
//!
//! Smoothing parameters are constrained to `beta <= alpha` and
//! `gamma <= 1 - alpha`; initial seasonal states sum to zero.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    information_criteria, FittedModel, ForecastDistribution, Innovation, ModelParams, Sampler,
    TrainingMeta, Transform,
};
use crate::error::{Error, Result};
use crate::optim::{bounded, unbounded, NelderMead};
use crate::scalar::{mean, variance, Scalar};
use crate::series::DailySeries;

const SMOOTH_LO: f64 = 1e-4;
const SMOOTH_HI: f64 = 0.9999;
const DAMP_LO: f64 = 0.8;
const DAMP_HI: f64 = 0.98;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtsTrend {
    None,
    Additive,
    Damped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtsSeason {
    None,
    Additive { period: usize },
}

impl EtsSeason {
    fn period(&self) -> usize {
        match self {
            EtsSeason::None => 1,
            EtsSeason::Additive { period } => *period,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EtsParams<T> {
    pub trend: EtsTrend,
    pub season: EtsSeason,
    pub alpha: T,
    /// Zero without a trend.
    pub beta: T,
    /// Zero without a season.
    pub gamma: T,
    /// One unless the trend is damped.
    pub phi: T,
    pub initial_level: T,
    pub initial_slope: T,
    /// Seasonal states for the first `period` observations.
    pub initial_season: Vec<T>,
    pub level: T,
    pub slope: T,
    /// Seasonal states rotated so element 0 applies to the first forecast day.
    pub season_state: Vec<T>,
}

impl<T: Scalar> fmt::Display for EtsParams<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = match self.trend {
            EtsTrend::None => "N",
            EtsTrend::Additive => "A",
            EtsTrend::Damped => "Ad",
        };
        let s = match self.season {
            EtsSeason::None => "N",
            EtsSeason::Additive { .. } => "A",
        };
        write!(f, "ETS(A,{t},{s})")
    }
}

/// Search space and optimizer settings for [`fit_ets_auto`].
#[derive(Debug, Clone)]
pub struct EtsConfig<T> {
    pub transform: Transform,
    pub trends: Vec<EtsTrend>,
    /// Also try an additive season of this length.
    pub season_period: Option<usize>,
    pub optimizer: NelderMead<T>,
    /// Starting values for alpha, one optimizer run per entry.
    pub alpha_starts: Vec<T>,
}

impl<T: Scalar> Default for EtsConfig<T> {
    fn default() -> Self {
        Self {
            transform: Transform::None,
            trends: vec![EtsTrend::None, EtsTrend::Additive, EtsTrend::Damped],
            season_period: Some(7),
            optimizer: NelderMead {
                step: T::lit(0.5),
                ..NelderMead::default()
            },
            alpha_starts: vec![T::lit(0.1), T::lit(0.3), T::lit(0.6)],
        }
    }
}

impl<T: Scalar> EtsConfig<T> {
    pub fn with_transform(mut self, transform: Transform) -> Self {
        self.transform = transform;
        self
    }
}

struct Filtered<T> {
    sse: T,
    residuals: Vec<T>,
    level: T,
    slope: T,
    season: Vec<T>,
}

/// Run the recursion from the initial states over `y`.
fn filter<T: Scalar>(p: &EtsParams<T>, y: &[T], keep_residuals: bool) -> Filtered<T> {
    let m = p.season.period();
    let seasonal = !matches!(p.season, EtsSeason::None);
    let mut level = p.initial_level;
    let mut slope = p.initial_slope;
    let mut season = if seasonal {
        p.initial_season.clone()
    } else {
        vec![T::zero()]
    };
    let mut sse = T::zero();
    let mut residuals = Vec::with_capacity(if keep_residuals { y.len() } else { 0 });
    for (t, &obs) in y.iter().enumerate() {
        let si = if seasonal { t % m } else { 0 };
        let damped = p.phi * slope;
        let base = level + damped;
        let e = obs - (base + season[si]);
        level = base + p.alpha * e;
        slope = damped + p.beta * e;
        season[si] = season[si] + p.gamma * e;
        sse = sse + e * e;
        if keep_residuals {
            residuals.push(e);
        }
    }
    if seasonal {
        season.rotate_left(y.len() % m);
    }
    Filtered {
        sse,
        residuals,
        level,
        slope,
        season,
    }
}

/// One-step-ahead fitted values of `y` under `p` (estimation scale).
pub fn one_step_forecasts<T: Scalar>(p: &EtsParams<T>, y: &[T]) -> Vec<T> {
    filter(p, y, true)
        .residuals
        .iter()
        .zip(y)
        .map(|(&e, &obs)| obs - e)
        .collect()
}

struct Layout {
    trend: EtsTrend,
    season: EtsSeason,
}

impl Layout {
    fn has_trend(&self) -> bool {
        !matches!(self.trend, EtsTrend::None)
    }

    fn seasonal(&self) -> bool {
        !matches!(self.season, EtsSeason::None)
    }

    fn damped(&self) -> bool {
        matches!(self.trend, EtsTrend::Damped)
    }

    /// Free parameters excluding the innovation variance.
    fn n_params(&self) -> usize {
        let mut k = 2; // alpha, level
        if self.has_trend() {
            k += 2;
        }
        if self.damped() {
            k += 1;
        }
        if self.seasonal() {
            k += 1 + self.season.period() - 1;
        }
        k
    }
}

struct Guess<T> {
    level: T,
    slope: T,
    season: Vec<T>,
    scale: T,
}

fn initial_guess<T: Scalar>(y: &[T], layout: &Layout) -> Guess<T> {
    let m = layout.season.period();
    let scale = variance(y).map(|v| v.sqrt()).unwrap_or_else(T::one);
    let scale = if scale > T::zero() { scale } else { T::one() };
    let mut season = vec![T::zero(); m];
    if layout.seasonal() {
        let weeks = (y.len() / m).clamp(1, 3);
        for w in 0..weeks {
            let block = &y[w * m..(w + 1) * m];
            let bm = mean(block).expect("nonempty block");
            for (s, &v) in season.iter_mut().zip(block) {
                *s = *s + (v - bm) / T::of(weeks);
            }
        }
        let c = mean(&season).expect("nonempty");
        for s in &mut season {
            *s = *s - c;
        }
    }
    let span = m.max(7).min(y.len());
    let first: Vec<T> = (0..span).map(|t| y[t] - season[t % m]).collect();
    let first_mean = mean(&first).expect("nonempty");
    let (level, slope) = if layout.has_trend() && y.len() >= 2 * span {
        let second: Vec<T> = (span..2 * span).map(|t| y[t] - season[t % m]).collect();
        let slope = (mean(&second).expect("nonempty") - first_mean) / T::of(span);
        (first_mean - slope * T::of(span + 1) / T::lit(2.0), slope)
    } else {
        (first_mean, T::zero())
    };
    Guess {
        level,
        slope,
        season,
        scale,
    }
}

fn decode<T: Scalar>(theta: &[T], layout: &Layout, g: &Guess<T>) -> EtsParams<T> {
    let lo = T::lit(SMOOTH_LO);
    let hi = T::lit(SMOOTH_HI);
    let mut it = theta.iter().copied();
    let mut next = || it.next().expect("parameter vector length");
    let alpha = bounded(next(), lo, hi);
    let beta = if layout.has_trend() {
        alpha * bounded(next(), lo, hi)
    } else {
        T::zero()
    };
    let gamma = if layout.seasonal() {
        (T::one() - alpha) * bounded(next(), lo, hi)
    } else {
        T::zero()
    };
    let phi = if layout.damped() {
        bounded(next(), T::lit(DAMP_LO), T::lit(DAMP_HI))
    } else {
        T::one()
    };
    let initial_level = g.level + g.scale * next();
    let initial_slope = if layout.has_trend() {
        g.slope + g.scale * T::lit(0.1) * next()
    } else {
        T::zero()
    };
    let initial_season = if layout.seasonal() {
        let m = layout.season.period();
        let mut s: Vec<T> = (0..m - 1).map(|j| g.season[j] + g.scale * next()).collect();
        let sum: T = s.iter().copied().sum();
        s.push(-sum);
        s
    } else {
        Vec::new()
    };
    EtsParams {
        trend: layout.trend,
        season: layout.season,
        alpha,
        beta,
        gamma,
        phi,
        initial_level,
        initial_slope,
        season_state: Vec::new(),
        level: initial_level,
        slope: initial_slope,
        initial_season,
    }
}

fn start_vector<T: Scalar>(layout: &Layout, alpha: T) -> Vec<T> {
    let lo = T::lit(SMOOTH_LO);
    let hi = T::lit(SMOOTH_HI);
    let mut v = vec![unbounded(alpha, lo, hi)];
    if layout.has_trend() {
        v.push(unbounded(T::lit(0.1), lo, hi));
    }
    if layout.seasonal() {
        v.push(unbounded(T::lit(0.1), lo, hi));
    }
    if layout.damped() {
        v.push(T::zero());
    }
    v.push(T::zero());
    if layout.has_trend() {
        v.push(T::zero());
    }
    if layout.seasonal() {
        v.extend(std::iter::repeat_n(T::zero(), layout.season.period() - 1));
    }
    v
}

struct Candidate<T> {
    params: EtsParams<T>,
    filtered: Filtered<T>,
    aicc: Option<T>,
    aic: Option<T>,
}

fn fit_candidate<T: Scalar>(y: &[T], layout: Layout, cfg: &EtsConfig<T>) -> Option<Candidate<T>> {
    let n = y.len();
    let g = initial_guess(y, &layout);
    let tiny = T::min_positive_value();
    let objective = |theta: &[T]| {
        let p = decode(theta, &layout, &g);
        let sse = filter(&p, y, false).sse;
        T::of(n) * (sse / T::of(n)).max(tiny).ln()
    };
    let best = cfg
        .alpha_starts
        .iter()
        .map(|&a| cfg.optimizer.minimize(objective, &start_vector(&layout, a)))
        .filter(|m| m.value.is_finite())
        .min_by(|a, b| a.value.partial_cmp(&b.value).expect("finite"))?;
    let mut params = decode(&best.x, &layout, &g);
    let filtered = filter(&params, y, true);
    params.level = filtered.level;
    params.slope = filtered.slope;
    params.season_state = filtered.season.clone();
    let (aic, aicc) = information_criteria(filtered.sse, n, layout.n_params() + 1);
    Some(Candidate {
        params,
        filtered,
        aicc,
        aic,
    })
}

fn degenerate_constant<T: Scalar>(y: &DailySeries<T>, c: T, transform: Transform) -> FittedModel<T> {
    let alpha = T::lit(SMOOTH_LO);
    FittedModel {
        params: ModelParams::Ets(EtsParams {
            trend: EtsTrend::None,
            season: EtsSeason::None,
            alpha,
            beta: T::zero(),
            gamma: T::zero(),
            phi: T::one(),
            initial_level: c,
            initial_slope: T::zero(),
            initial_season: Vec::new(),
            level: c,
            slope: T::zero(),
            season_state: vec![T::zero()],
        }),
        residual_sd: T::zero(),
        residuals: vec![T::zero(); y.len()],
        training_meta: TrainingMeta {
            n_obs: y.len(),
            end_date: y.end(),
            transform,
            aic: None,
            aicc: None,
        },
    }
}

/// Fit every candidate form and keep the one with the smallest AICc.
pub fn fit_ets_auto<T: Scalar>(y: &DailySeries<T>, cfg: &EtsConfig<T>) -> Result<FittedModel<T>> {
    let values: Vec<T> = y.values().iter().map(|&v| cfg.transform.apply(v)).collect();
    let n = values.len();
    let min_len = cfg.season_period.map(|m| 3 * m).unwrap_or(4).max(4);
    if n < min_len {
        return Err(Error::Data(format!(
            "ETS needs at least {min_len} observations, got {n}"
        )));
    }
    let (lo, hi) = values
        .iter()
        .fold((values[0], values[0]), |(a, b), &v| (a.min(v), b.max(v)));
    if lo == hi {
        return Ok(degenerate_constant(y, lo, cfg.transform));
    }

    let mut seasons = vec![EtsSeason::None];
    if let Some(period) = cfg.season_period {
        seasons.push(EtsSeason::Additive { period });
    }
    let mut best: Option<Candidate<T>> = None;
    for &season in &seasons {
        for &trend in &cfg.trends {
            let layout = Layout { trend, season };
            if n <= layout.n_params() + 2 {
                continue;
            }
            let Some(c) = fit_candidate(&values, layout, cfg) else {
                continue;
            };
            let Some(score) = c.aicc else { continue };
            let better = match &best {
                None => true,
                Some(b) => score < b.aicc.expect("scored"),
            };
            if better {
                best = Some(c);
            }
        }
    }
    let best = best.ok_or_else(|| Error::Fit("no ETS candidate could be estimated".into()))?;
    let dof = n.saturating_sub(1).max(1);
    let residual_sd = (best.filtered.sse / T::of(dof)).sqrt();
    Ok(FittedModel {
        params: ModelParams::Ets(best.params),
        residual_sd,
        residuals: best.filtered.residuals,
        training_meta: TrainingMeta {
            n_obs: n,
            end_date: y.end(),
            transform: cfg.transform,
            aic: best.aic,
            aicc: best.aicc,
        },
    })
}

/// Re-run the recursion with fixed parameters over a longer history that
/// starts on the same date as the original fit.
pub fn update<T: Scalar>(model: &FittedModel<T>, y: &DailySeries<T>) -> Result<FittedModel<T>> {
    let ModelParams::Ets(p) = &model.params else {
        return Err(Error::Fit("not an ETS model".into()));
    };
    let transform = model.training_meta.transform;
    let values: Vec<T> = y.values().iter().map(|&v| transform.apply(v)).collect();
    let f = filter(p, &values, true);
    let mut params = p.clone();
    params.level = f.level;
    params.slope = f.slope;
    params.season_state = f.season;
    Ok(FittedModel {
        params: ModelParams::Ets(params),
        residual_sd: model.residual_sd,
        residuals: f.residuals,
        training_meta: TrainingMeta {
            n_obs: values.len(),
            end_date: y.end(),
            ..model.training_meta.clone()
        },
    })
}

/// Estimation-scale point forecasts for `h = 1..=horizon`.
pub(super) fn point_forecast<T: Scalar>(p: &EtsParams<T>, horizon: usize) -> Vec<T> {
    let m = p.season_state.len().max(1);
    let mut damp_sum = T::zero();
    let mut power = T::one();
    (0..horizon)
        .map(|h| {
            power = power * p.phi;
            damp_sum = damp_sum + power;
            let s = p.season_state.get(h % m).copied().unwrap_or_else(T::zero);
            p.level + damp_sum * p.slope + s
        })
        .collect()
}

pub(super) fn forecast<T: Scalar>(
    model: &FittedModel<T>,
    p: &EtsParams<T>,
    horizon: usize,
    paths: usize,
    seed: u64,
    innovation: Innovation,
) -> ForecastDistribution<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = Sampler::new(innovation, model.residual_sd, &model.residuals);
    let transform = model.training_meta.transform;
    let m = p.season_state.len().max(1);
    let sims = (0..paths)
        .map(|_| {
            let mut level = p.level;
            let mut slope = p.slope;
            let mut season = if p.season_state.is_empty() {
                vec![T::zero()]
            } else {
                p.season_state.clone()
            };
            (0..horizon)
                .map(|h| {
                    let si = h % m;
                    let damped = p.phi * slope;
                    let base = level + damped;
                    let e = sampler.draw(&mut rng);
                    let y = base + season[si] + e;
                    level = base + p.alpha * e;
                    slope = damped + p.beta * e;
                    season[si] = season[si] + p.gamma * e;
                    transform.invert(y)
                })
                .collect()
        })
        .collect();
    ForecastDistribution::from_paths(model.training_meta.end_date, sims)
        .expect("ETS paths are finite and clamped")
}
