//! Seasonal ARIMA (period 7) estimated by conditional sum of squares, with
//! automatic order selection by AIC.
//!
//! Differencing orders are chosen first (a seasonal-strength rule for `D`,
//! repeated KPSS tests for `d`); ARMA orders are then searched either
//! stepwise or exhaustively. AR and MA polynomials are parameterized through
//! partial autocorrelations, so every candidate the optimizer visits is
//! stationary and invertible.

use std::collections::HashSet;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    information_criteria, FittedModel, ForecastDistribution, Innovation, ModelParams, Sampler,
    TrainingMeta, Transform,
};
use crate::error::{Error, Result};
use crate::optim::NelderMead;
use crate::scalar::{mean, variance, Scalar};
use crate::series::DailySeries;

/// KPSS level-stationarity critical value at the 5% level.
const KPSS_CRITICAL: f64 = 0.463;
/// Seasonal strength above which one seasonal difference is taken.
const SEASONAL_STRENGTH: f64 = 0.64;
/// Polynomial roots must lie outside this radius.
const ROOT_MARGIN: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub seasonal_p: usize,
    pub seasonal_d: usize,
    pub seasonal_q: usize,
    pub period: usize,
}

impl fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ARIMA({},{},{})({},{},{})[{}]",
            self.p, self.d, self.q, self.seasonal_p, self.seasonal_d, self.seasonal_q, self.period
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ArimaParams<T> {
    pub order: ArimaOrder,
    /// `phi` in `(1 - phi_1 B - ...)`.
    pub ar: Vec<T>,
    /// `theta` in `(1 + theta_1 B + ...)`.
    pub ma: Vec<T>,
    pub seasonal_ar: Vec<T>,
    pub seasonal_ma: Vec<T>,
    /// Mean of the differenced series (a drift when differenced once);
    /// `None` when the model has no constant.
    pub mean: Option<T>,
    /// Latest observations on the estimation scale, oldest first.
    pub history: Vec<T>,
    /// Latest innovations, aligned with the end of `history`.
    pub recent_residuals: Vec<T>,
}

/// Dense product of two polynomials given by coefficient vectors.
fn poly_mul<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == T::zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = out[i + j] + x * y;
        }
    }
    out
}

/// `1 + sign * (c_1 B^s + c_2 B^{2s} + ...)`
fn lag_poly<T: Scalar>(c: &[T], s: usize, sign: T) -> Vec<T> {
    let mut out = vec![T::zero(); c.len() * s + 1];
    out[0] = T::one();
    for (i, &v) in c.iter().enumerate() {
        out[(i + 1) * s] = sign * v;
    }
    out
}

impl<T: Scalar> ArimaParams<T> {
    /// Expanded `phi(B) Phi(B^s)` as coefficients `a_k` with
    /// `z_t = sum a_k z_{t-k} + ...`.
    pub fn ar_expanded(&self) -> Vec<T> {
        let s = self.order.period;
        let poly = poly_mul(
            &lag_poly(&self.ar, 1, -T::one()),
            &lag_poly(&self.seasonal_ar, s, -T::one()),
        );
        poly[1..].iter().map(|&c| -c).collect()
    }

    /// Expanded `theta(B) Theta(B^s)` without the leading one.
    pub fn ma_expanded(&self) -> Vec<T> {
        let s = self.order.period;
        let poly = poly_mul(
            &lag_poly(&self.ma, 1, T::one()),
            &lag_poly(&self.seasonal_ma, s, T::one()),
        );
        poly[1..].to_vec()
    }

    /// AR operator including differencing, as coefficients `psi_k` with
    /// `x_t = c + sum psi_k x_{t-k} + e_t + sum theta_j e_{t-j}`.
    pub fn integrated_ar(&self) -> Vec<T> {
        let s = self.order.period;
        let mut poly = poly_mul(
            &lag_poly(&self.ar, 1, -T::one()),
            &lag_poly(&self.seasonal_ar, s, -T::one()),
        );
        for _ in 0..self.order.d {
            poly = poly_mul(&poly, &[T::one(), -T::one()]);
        }
        for _ in 0..self.order.seasonal_d {
            poly = poly_mul(&poly, &lag_poly(&[T::one()], s, -T::one()));
        }
        poly[1..].iter().map(|&c| -c).collect()
    }

    /// Intercept of the integrated recursion.
    pub fn constant(&self) -> T {
        let Some(mu) = self.mean else {
            return T::zero();
        };
        let one_minus = |c: &[T]| T::one() - c.iter().copied().sum::<T>();
        mu * one_minus(&self.ar) * one_minus(&self.seasonal_ar)
    }

    /// Stationarity and invertibility with a small safety margin.
    pub fn is_admissible(&self) -> bool {
        let neg = |c: &[T]| c.iter().map(|&v| -v).collect::<Vec<_>>();
        is_stationary(&self.ar)
            && is_stationary(&self.seasonal_ar)
            && is_stationary(&neg(&self.ma))
            && is_stationary(&neg(&self.seasonal_ma))
    }
}

impl<T: Scalar> fmt::Display for ArimaParams<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.order)?;
        if self.mean.is_some() {
            f.write_str(if self.order.d + self.order.seasonal_d == 0 {
                " with mean"
            } else {
                " with drift"
            })?;
        }
        Ok(())
    }
}

/// True when all roots of `1 - a_1 z - ... - a_p z^p` lie outside the
/// circle of radius 1.01. Uses the Schur-Cohn step-down recursion.
pub fn is_stationary<T: Scalar>(a: &[T]) -> bool {
    let margin = T::lit(ROOT_MARGIN);
    let mut scale = T::one();
    let mut b: Vec<T> = a
        .iter()
        .map(|&v| {
            scale = scale * margin;
            v * scale
        })
        .collect();
    while let Some(&last) = b.last() {
        if last == T::zero() {
            b.pop();
        } else {
            break;
        }
    }
    for k in (1..=b.len()).rev() {
        let r = b[k - 1];
        if !(r.abs() < T::one()) {
            return false;
        }
        let denom = T::one() - r * r;
        let prev: Vec<T> = (0..k - 1).map(|i| (b[i] + r * b[k - 2 - i]) / denom).collect();
        b = prev;
    }
    true
}

/// Map partial autocorrelations in (-1, 1) to AR coefficients.
fn step_up<T: Scalar>(partials: &[T]) -> Vec<T> {
    let mut a: Vec<T> = Vec::with_capacity(partials.len());
    for (k, &r) in partials.iter().enumerate() {
        let prev = a.clone();
        for i in 0..k {
            a[i] = prev[i] - r * prev[k - 1 - i];
        }
        a.push(r);
    }
    a
}

/// Search strategy over ARMA orders once differencing is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderSearch {
    /// Local search from a few starting models, moving one order at a time.
    Stepwise { max_models: usize },
    /// Every order within the bounds whose total `p+q+P+Q` is at most
    /// `max_order`.
    Exhaustive { max_order: usize },
}

#[derive(Debug, Clone)]
pub struct ArimaConfig<T> {
    pub transform: Transform,
    pub max_p: usize,
    pub max_q: usize,
    pub max_d: usize,
    pub max_seasonal_p: usize,
    pub max_seasonal_q: usize,
    pub max_seasonal_d: usize,
    pub period: usize,
    /// Consider a mean/drift term when `d + D <= 1`.
    pub allow_constant: bool,
    pub search: OrderSearch,
    pub optimizer: NelderMead<T>,
}

impl<T: Scalar> Default for ArimaConfig<T> {
    fn default() -> Self {
        Self {
            transform: Transform::None,
            max_p: 5,
            max_q: 5,
            max_d: 2,
            max_seasonal_p: 2,
            max_seasonal_q: 2,
            max_seasonal_d: 1,
            period: 7,
            allow_constant: true,
            search: OrderSearch::Stepwise { max_models: 94 },
            optimizer: NelderMead::default(),
        }
    }
}

impl<T: Scalar> ArimaConfig<T> {
    pub fn with_transform(mut self, transform: Transform) -> Self {
        self.transform = transform;
        self
    }

    /// `use_log` selects the shifted-log scale.
    pub fn with_log(self, use_log: bool) -> Self {
        self.with_transform(if use_log {
            Transform::ShiftedLog
        } else {
            Transform::None
        })
    }
}

fn difference<T: Scalar>(x: &[T], lag: usize) -> Vec<T> {
    x.iter().skip(lag).zip(x).map(|(&a, &b)| a - b).collect()
}

fn differenced<T: Scalar>(x: &[T], d: usize, seasonal_d: usize, period: usize) -> Vec<T> {
    let mut w = x.to_vec();
    for _ in 0..seasonal_d {
        w = difference(&w, period);
    }
    for _ in 0..d {
        w = difference(&w, 1);
    }
    w
}

/// KPSS statistic for level stationarity with a Bartlett long-run variance
/// using `trunc(12 (n/100)^(1/4))` lags.
pub fn kpss_statistic<T: Scalar>(x: &[T]) -> T {
    let n = x.len();
    let m = mean(x).unwrap_or_else(T::zero);
    let e: Vec<T> = x.iter().map(|&v| v - m).collect();
    let nf = T::of(n);
    let mut partial = T::zero();
    let mut eta = T::zero();
    for &v in &e {
        partial = partial + v;
        eta = eta + partial * partial;
    }
    let lags = (12.0 * (n as f64 / 100.0).powf(0.25)) as usize;
    let lags = lags.min(n.saturating_sub(1));
    let mut lrv = e.iter().map(|&v| v * v).sum::<T>() / nf;
    for l in 1..=lags {
        let w = T::one() - T::of(l) / T::of(lags + 1);
        let g = e[l..].iter().zip(&e).map(|(&a, &b)| a * b).sum::<T>() / nf;
        lrv = lrv + T::lit(2.0) * w * g;
    }
    if !(lrv > T::zero()) {
        return T::zero();
    }
    eta / (nf * nf * lrv)
}

/// Strength of the period-`m` seasonal component after removing a centred
/// moving-average trend: `max(0, 1 - Var(remainder) / Var(detrended))`.
pub fn seasonal_strength<T: Scalar>(x: &[T], m: usize) -> T {
    let n = x.len();
    let half = m / 2;
    if m < 2 || n < 2 * m + 2 * half {
        return T::zero();
    }
    let trend = |t: usize| -> T {
        if m % 2 == 1 {
            x[t - half..=t + half].iter().copied().sum::<T>() / T::of(m)
        } else {
            let inner: T = x[t + 1 - half..t + half].iter().copied().sum();
            (inner + (x[t - half] + x[t + half]) * T::lit(0.5)) / T::of(m)
        }
    };
    let idx: Vec<usize> = (half..n - half).collect();
    let detrended: Vec<T> = idx.iter().map(|&t| x[t] - trend(t)).collect();
    let mut sums = vec![T::zero(); m];
    let mut counts = vec![0usize; m];
    for (&t, &v) in idx.iter().zip(&detrended) {
        sums[t % m] = sums[t % m] + v;
        counts[t % m] += 1;
    }
    let mut season: Vec<T> = sums.iter().zip(&counts).map(|(&s, &c)| s / T::of(c)).collect();
    let centre = mean(&season).expect("m >= 2");
    for s in &mut season {
        *s = *s - centre;
    }
    let remainder: Vec<T> = idx
        .iter()
        .zip(&detrended)
        .map(|(&t, &v)| v - season[t % m])
        .collect();
    let (Some(vr), Some(vd)) = (variance(&remainder), variance(&detrended)) else {
        return T::zero();
    };
    if !(vd > T::zero()) {
        return T::zero();
    }
    (T::one() - vr / vd).max(T::zero())
}

fn is_constant<T: Scalar>(x: &[T]) -> bool {
    x.windows(2).all(|w| w[0] == w[1])
}

/// Differencing orders `(d, D)`.
pub fn choose_differences<T: Scalar>(x: &[T], cfg: &ArimaConfig<T>) -> (usize, usize) {
    let m = cfg.period;
    let mut seasonal_d = 0;
    if cfg.max_seasonal_d > 0
        && x.len() >= 3 * m + 10
        && seasonal_strength(x, m) > T::lit(SEASONAL_STRENGTH)
    {
        seasonal_d = 1;
    }
    let mut w = differenced(x, 0, seasonal_d, m);
    let mut d = 0;
    while d < cfg.max_d
        && w.len() > 10
        && !is_constant(&w)
        && kpss_statistic(&w) > T::lit(KPSS_CRITICAL)
    {
        w = difference(&w, 1);
        d += 1;
    }
    (d, seasonal_d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Arma {
    p: usize,
    q: usize,
    sp: usize,
    sq: usize,
    constant: bool,
}

impl Arma {
    fn n_coef(&self) -> usize {
        self.p + self.q + self.sp + self.sq + usize::from(self.constant)
    }
}

struct Problem<'a, T> {
    w: &'a [T],
    cond: usize,
    period: usize,
    w_mean: T,
    w_scale: T,
}

fn nonzero_lags<T: Scalar>(c: &[T]) -> Vec<(usize, T)> {
    c.iter()
        .enumerate()
        .filter(|(_, &v)| v != T::zero())
        .map(|(i, &v)| (i + 1, v))
        .collect()
}

/// CSS residuals of the ARMA part on the differenced series; entries before
/// `cond` are zero.
fn css_residuals<T: Scalar>(
    w: &[T],
    mu: T,
    ar: &[(usize, T)],
    ma: &[(usize, T)],
    cond: usize,
    resid: &mut Vec<T>,
) -> T {
    resid.clear();
    resid.resize(w.len(), T::zero());
    let mut sse = T::zero();
    for t in cond..w.len() {
        let mut e = w[t] - mu;
        for &(k, a) in ar {
            e = e - a * (w[t - k] - mu);
        }
        for &(j, m) in ma {
            if j <= t {
                e = e - m * resid[t - j];
            }
        }
        resid[t] = e;
        sse = sse + e * e;
    }
    sse
}

/// Conditional sum of squares of `params` on an already differenced series,
/// conditioning on the first `cond` observations.
pub fn css_objective<T: Scalar>(params: &ArimaParams<T>, w: &[T], cond: usize) -> T {
    let mut resid = Vec::new();
    css_residuals(
        w,
        params.mean.unwrap_or_else(T::zero),
        &nonzero_lags(&params.ar_expanded()),
        &nonzero_lags(&params.ma_expanded()),
        cond,
        &mut resid,
    )
}

fn decode<T: Scalar>(theta: &[T], arma: Arma, prob: &Problem<'_, T>, order: ArimaOrder) -> ArimaParams<T> {
    let mut it = theta.iter().copied();
    let mut take = |k: usize| -> Vec<T> { (0..k).map(|_| it.next().expect("length").tanh()).collect() };
    let ar = step_up(&take(arma.p));
    let ma: Vec<T> = step_up(&take(arma.q)).into_iter().map(|v| -v).collect();
    let seasonal_ar = step_up(&take(arma.sp));
    let seasonal_ma: Vec<T> = step_up(&take(arma.sq)).into_iter().map(|v| -v).collect();
    let mean = if arma.constant {
        Some(prob.w_mean + prob.w_scale * theta[theta.len() - 1])
    } else {
        None
    };
    ArimaParams {
        order: ArimaOrder {
            p: arma.p,
            q: arma.q,
            seasonal_p: arma.sp,
            seasonal_q: arma.sq,
            period: prob.period,
            ..order
        },
        ar,
        ma,
        seasonal_ar,
        seasonal_ma,
        mean,
        history: Vec::new(),
        recent_residuals: Vec::new(),
    }
}

struct CandidateFit<T> {
    params: ArimaParams<T>,
    sse: T,
    aic: T,
    aicc: Option<T>,
    n_used: usize,
}

fn fit_arma<T: Scalar>(
    prob: &Problem<'_, T>,
    arma: Arma,
    order: ArimaOrder,
    optimizer: &NelderMead<T>,
) -> Option<CandidateFit<T>> {
    let n_used = prob.w.len() - prob.cond;
    if arma.p + prob.period * arma.sp > prob.cond || n_used <= arma.n_coef() + 2 {
        return None;
    }
    let tiny = T::min_positive_value();
    let mut resid = Vec::with_capacity(prob.w.len());
    let mut objective = |theta: &[T]| {
        let p = decode(theta, arma, prob, order);
        let sse = css_residuals(
            prob.w,
            p.mean.unwrap_or_else(T::zero),
            &nonzero_lags(&p.ar_expanded()),
            &nonzero_lags(&p.ma_expanded()),
            prob.cond,
            &mut resid,
        );
        T::of(n_used) * (sse / T::of(n_used)).max(tiny).ln()
    };
    let x0 = vec![T::zero(); arma.n_coef()];
    let best = optimizer.minimize(&mut objective, &x0);
    if !best.value.is_finite() {
        return None;
    }
    let params = decode(&best.x, arma, prob, order);
    if !params.is_admissible() {
        return None;
    }
    let sse = css_objective(&params, prob.w, prob.cond);
    let (aic, aicc) = information_criteria(sse, n_used, arma.n_coef() + 1);
    Some(CandidateFit {
        params,
        sse,
        aic: aic?,
        aicc,
        n_used,
    })
}

fn neighbours(a: Arma, allow_constant: bool) -> Vec<Arma> {
    let mut out = Vec::new();
    let deltas: [(isize, isize, isize, isize); 12] = [
        (0, 0, -1, 0),
        (0, 0, 1, 0),
        (0, 0, 0, -1),
        (0, 0, 0, 1),
        (0, 0, -1, -1),
        (0, 0, 1, 1),
        (-1, 0, 0, 0),
        (1, 0, 0, 0),
        (0, -1, 0, 0),
        (0, 1, 0, 0),
        (-1, -1, 0, 0),
        (1, 1, 0, 0),
    ];
    for (dp, dq, dsp, dsq) in deltas {
        let shift = |v: usize, d: isize| v.checked_add_signed(d);
        if let (Some(p), Some(q), Some(sp), Some(sq)) = (
            shift(a.p, dp),
            shift(a.q, dq),
            shift(a.sp, dsp),
            shift(a.sq, dsq),
        ) {
            out.push(Arma { p, q, sp, sq, ..a });
        }
    }
    if allow_constant {
        out.push(Arma {
            constant: !a.constant,
            ..a
        });
    }
    out
}

/// Select `(d, D)` by unit-root tests, then ARMA orders by minimum AIC.
pub fn fit_arima_auto<T: Scalar>(
    y: &DailySeries<T>,
    cfg: &ArimaConfig<T>,
) -> Result<FittedModel<T>> {
    let x: Vec<T> = y.values().iter().map(|&v| cfg.transform.apply(v)).collect();
    let n = x.len();
    if n < 30 {
        return Err(Error::Data(format!(
            "ARIMA needs at least 30 observations, got {n}"
        )));
    }
    if is_constant(&x) {
        return Ok(constant_model(&x, y, cfg));
    }
    let (d, seasonal_d) = choose_differences(&x, cfg);
    let order = ArimaOrder {
        p: 0,
        d,
        q: 0,
        seasonal_p: 0,
        seasonal_d,
        seasonal_q: 0,
        period: cfg.period,
    };
    let w = differenced(&x, d, seasonal_d, cfg.period);
    let cond = (cfg.max_p + cfg.period * cfg.max_seasonal_p).min(w.len() / 4);
    let w_scale = variance(&w)
        .map(|v| v.sqrt())
        .filter(|s| *s > T::zero())
        .unwrap_or_else(T::one);
    let prob = Problem {
        w: &w,
        cond,
        period: cfg.period,
        w_mean: mean(&w[cond..]).unwrap_or_else(T::zero),
        w_scale,
    };
    let allow_constant = cfg.allow_constant && d + seasonal_d <= 1;
    let in_bounds = |a: &Arma| {
        a.p <= cfg.max_p && a.q <= cfg.max_q && a.sp <= cfg.max_seasonal_p && a.sq <= cfg.max_seasonal_q
    };

    let budget = match cfg.search {
        OrderSearch::Stepwise { max_models } => max_models,
        OrderSearch::Exhaustive { .. } => usize::MAX,
    };
    let mut best: Option<CandidateFit<T>> = None;
    let mut visited: HashSet<Arma> = HashSet::new();
    let mut try_model = |a: Arma, best: &mut Option<CandidateFit<T>>| -> bool {
        if visited.len() >= budget || !in_bounds(&a) || !visited.insert(a) {
            return false;
        }
        let Some(fit) = fit_arma(&prob, a, order, &cfg.optimizer) else {
            return false;
        };
        let better = best.as_ref().is_none_or(|b| fit.aic < b.aic);
        if better {
            *best = Some(fit);
        }
        better
    };

    match cfg.search {
        OrderSearch::Exhaustive { max_order } => {
            for p in 0..=cfg.max_p {
                for q in 0..=cfg.max_q {
                    for sp in 0..=cfg.max_seasonal_p {
                        for sq in 0..=cfg.max_seasonal_q {
                            if p + q + sp + sq > max_order {
                                continue;
                            }
                            for constant in [false, true] {
                                if constant && !allow_constant {
                                    continue;
                                }
                                try_model(Arma { p, q, sp, sq, constant }, &mut best);
                            }
                        }
                    }
                }
            }
        }
        OrderSearch::Stepwise { .. } => {
            let clip = |p: usize, q: usize, sp: usize, sq: usize| Arma {
                p: p.min(cfg.max_p),
                q: q.min(cfg.max_q),
                sp: sp.min(cfg.max_seasonal_p),
                sq: sq.min(cfg.max_seasonal_q),
                constant: allow_constant,
            };
            for a in [clip(2, 2, 1, 1), clip(0, 0, 0, 0), clip(1, 0, 1, 0), clip(0, 1, 0, 1)] {
                try_model(a, &mut best);
            }
            if !allow_constant || best.is_none() {
                try_model(Arma { constant: false, ..clip(0, 0, 0, 0) }, &mut best);
            }
            'search: while let Some(current) = best.as_ref().map(|b| arma_of(&b.params)) {
                for nb in neighbours(current, allow_constant) {
                    if try_model(nb, &mut best) {
                        continue 'search;
                    }
                }
                break;
            }
        }
    }

    let best = best.ok_or_else(|| Error::Fit("no admissible ARIMA candidate".into()))?;
    Ok(finish(best, &x, &w, cond, y, cfg.transform))
}

/// A flat series has a degenerate likelihood; it is its own mean model.
fn constant_model<T: Scalar>(x: &[T], y: &DailySeries<T>, cfg: &ArimaConfig<T>) -> FittedModel<T> {
    FittedModel {
        params: ModelParams::Arima(ArimaParams {
            order: ArimaOrder {
                p: 0,
                d: 0,
                q: 0,
                seasonal_p: 0,
                seasonal_d: 0,
                seasonal_q: 0,
                period: cfg.period,
            },
            ar: vec![],
            ma: vec![],
            seasonal_ar: vec![],
            seasonal_ma: vec![],
            mean: Some(x[0]),
            history: vec![],
            recent_residuals: vec![],
        }),
        residual_sd: T::zero(),
        residuals: vec![T::zero(); x.len()],
        training_meta: TrainingMeta {
            n_obs: x.len(),
            end_date: y.end(),
            transform: cfg.transform,
            aic: None,
            aicc: None,
        },
    }
}

fn arma_of<T>(p: &ArimaParams<T>) -> Arma {
    Arma {
        p: p.order.p,
        q: p.order.q,
        sp: p.order.seasonal_p,
        sq: p.order.seasonal_q,
        constant: p.mean.is_some(),
    }
}

/// Attach history tails and residual statistics to a fitted candidate.
fn finish<T: Scalar>(
    fit: CandidateFit<T>,
    x: &[T],
    w: &[T],
    cond: usize,
    y: &DailySeries<T>,
    transform: Transform,
) -> FittedModel<T> {
    let mut params = fit.params;
    let (resid, valid) = state_from(&mut params, x, w, cond);
    let k = arma_of(&params).n_coef();
    let dof = if fit.n_used > k { fit.n_used - k } else { fit.n_used };
    FittedModel {
        params: ModelParams::Arima(params),
        residual_sd: (fit.sse / T::of(dof)).sqrt(),
        residuals: resid[valid..].to_vec(),
        training_meta: TrainingMeta {
            n_obs: x.len(),
            end_date: y.end(),
            transform,
            aic: Some(fit.aic),
            aicc: fit.aicc,
        },
    }
}

/// Recompute residuals and store the history tails; returns the residuals
/// on the differenced index and the first valid position.
fn state_from<T: Scalar>(params: &mut ArimaParams<T>, x: &[T], w: &[T], cond: usize) -> (Vec<T>, usize) {
    let mut resid = Vec::new();
    css_residuals(
        w,
        params.mean.unwrap_or_else(T::zero),
        &nonzero_lags(&params.ar_expanded()),
        &nonzero_lags(&params.ma_expanded()),
        cond,
        &mut resid,
    );
    let kx = params.integrated_ar().len();
    let ke = params.ma_expanded().len();
    params.history = x[x.len() - kx.min(x.len())..].to_vec();
    params.recent_residuals = resid[resid.len() - ke.min(resid.len())..].to_vec();
    (resid, cond)
}

/// Re-run the residual recursion with fixed coefficients over a longer
/// history that starts on the same date as the original fit.
pub fn update<T: Scalar>(model: &FittedModel<T>, y: &DailySeries<T>) -> Result<FittedModel<T>> {
    let ModelParams::Arima(p) = &model.params else {
        return Err(Error::Fit("not an ARIMA model".into()));
    };
    let transform = model.training_meta.transform;
    let x: Vec<T> = y.values().iter().map(|&v| transform.apply(v)).collect();
    let o = p.order;
    let w = differenced(&x, o.d, o.seasonal_d, o.period);
    let orig_w_len = model.training_meta.n_obs.saturating_sub(o.d + o.period * o.seasonal_d);
    let cond = orig_w_len.saturating_sub(model.residuals.len());
    if w.len() <= cond {
        return Err(Error::Data("series too short to update ARIMA state".into()));
    }
    let mut params = p.clone();
    let (resid, valid) = state_from(&mut params, &x, &w, cond);
    Ok(FittedModel {
        params: ModelParams::Arima(params),
        residual_sd: model.residual_sd,
        residuals: resid[valid..].to_vec(),
        training_meta: TrainingMeta {
            n_obs: x.len(),
            end_date: y.end(),
            ..model.training_meta.clone()
        },
    })
}

struct Recursion<T> {
    psi: Vec<(usize, T)>,
    theta: Vec<(usize, T)>,
    constant: T,
}

impl<T: Scalar> Recursion<T> {
    fn new(p: &ArimaParams<T>) -> Self {
        Self {
            psi: nonzero_lags(&p.integrated_ar()),
            theta: nonzero_lags(&p.ma_expanded()),
            constant: p.constant(),
        }
    }

    /// Extend `x` and `e` (both already holding history) by `horizon` steps.
    fn run(&self, x: &mut Vec<T>, e: &mut Vec<T>, horizon: usize, mut shock: impl FnMut() -> T) {
        for _ in 0..horizon {
            let (nx, ne) = (x.len(), e.len());
            let mut v = self.constant;
            for &(k, a) in &self.psi {
                if k <= nx {
                    v = v + a * x[nx - k];
                }
            }
            for &(j, m) in &self.theta {
                if j <= ne {
                    v = v + m * e[ne - j];
                }
            }
            let s = shock();
            x.push(v + s);
            e.push(s);
        }
    }
}

/// Estimation-scale point forecasts for `h = 1..=horizon`.
pub(super) fn point_forecast<T: Scalar>(p: &ArimaParams<T>, horizon: usize) -> Vec<T> {
    let rec = Recursion::new(p);
    let mut x = p.history.clone();
    let mut e = p.recent_residuals.clone();
    let start = x.len();
    rec.run(&mut x, &mut e, horizon, T::zero);
    x.split_off(start)
}

pub(super) fn forecast<T: Scalar>(
    model: &FittedModel<T>,
    p: &ArimaParams<T>,
    horizon: usize,
    paths: usize,
    seed: u64,
    innovation: Innovation,
) -> ForecastDistribution<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = Sampler::new(innovation, model.residual_sd, &model.residuals);
    let transform = model.training_meta.transform;
    let rec = Recursion::new(p);
    let start = p.history.len();
    let mut x = Vec::with_capacity(start + horizon);
    let mut e = Vec::with_capacity(p.recent_residuals.len() + horizon);
    let sims = (0..paths)
        .map(|_| {
            x.clear();
            x.extend_from_slice(&p.history);
            e.clear();
            e.extend_from_slice(&p.recent_residuals);
            rec.run(&mut x, &mut e, horizon, || sampler.draw(&mut rng));
            x[start..].iter().map(|&v| transform.invert(v)).collect()
        })
        .collect();
    ForecastDistribution::from_paths(model.training_meta.end_date, sims)
        .expect("ARIMA paths are finite and clamped")
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn series(v: Vec<f64>) -> DailySeries<f64> {
        DailySeries::new("y", NaiveDate::from_ymd_opt(2020, 3, 18).unwrap(), v).unwrap()
    }

    fn ar1(phi: f64, n: usize, seed: u64, offset: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = 0.0;
        let burn = 100;
        (0..n + burn)
            .map(|_| {
                z = phi * z + f64::standard_normal(&mut rng);
                z + offset
            })
            .skip(burn)
            .collect()
    }

    fn hand_model(order: ArimaOrder, ar: Vec<f64>, mean: Option<f64>, history: Vec<f64>) -> FittedModel<f64> {
        FittedModel {
            params: ModelParams::Arima(ArimaParams {
                order,
                ar,
                ma: vec![],
                seasonal_ar: vec![],
                seasonal_ma: vec![],
                mean,
                history,
                recent_residuals: vec![],
            }),
            residual_sd: 0.0,
            residuals: vec![],
            training_meta: TrainingMeta {
                n_obs: 50,
                end_date: NaiveDate::from_ymd_opt(2020, 5, 1).unwrap(),
                transform: Transform::None,
                aic: None,
                aicc: None,
            },
        }
    }

    fn order(p: usize, d: usize, q: usize) -> ArimaOrder {
        ArimaOrder {
            p,
            d,
            q,
            seasonal_p: 0,
            seasonal_d: 0,
            seasonal_q: 0,
            period: 7,
        }
    }

    #[test]
    fn ar1_point_forecast_halves() {
        let m = hand_model(order(1, 0, 0), vec![0.5], Some(0.0), vec![8.0]);
        assert_eq!(m.point_forecast(4).unwrap(), vec![4.0, 2.0, 1.0, 0.5]);
        let f = m.forecast(3, 5, 1, Innovation::Gaussian).unwrap();
        assert!(f.paths().iter().all(|p| p == &vec![4.0, 2.0, 1.0]));
    }

    #[test]
    fn random_walk_point_forecast_is_flat() {
        let m = hand_model(order(0, 1, 0), vec![], None, vec![17.0]);
        assert_eq!(m.point_forecast(3).unwrap(), vec![17.0; 3]);
    }

    #[test]
    fn white_noise_mean_model() {
        let m = hand_model(order(0, 0, 0), vec![], Some(6.5), vec![]);
        assert_eq!(m.point_forecast(2).unwrap(), vec![6.5; 2]);
    }

    #[test]
    fn stationarity_matches_ar2_triangle() {
        // AR(2) is stationary iff a2 + a1 < 1, a2 - a1 < 1, |a2| < 1
        let grid: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.1).collect();
        for &a1 in &grid {
            for &a2 in &grid {
                let inside = a2 + a1 < 1.0 && a2 - a1 < 1.0 && a2.abs() < 1.0;
                // stay clear of the margin band
                let clear = (a2 + a1 - 1.0).abs() > 0.05
                    && (a2 - a1 - 1.0).abs() > 0.05
                    && (a2.abs() - 1.0).abs() > 0.05;
                if clear {
                    assert_eq!(is_stationary(&[a1, a2]), inside, "{a1} {a2}");
                }
            }
        }
        assert!(is_stationary::<f64>(&[]));
        assert!(!is_stationary(&[1.0]));
    }

    #[test]
    fn step_up_is_stationary() {
        let a = step_up(&[0.9, -0.8, 0.7]);
        assert!(is_stationary(&a));
        assert_eq!(step_up(&[0.4]), vec![0.4]);
    }

    #[test]
    fn integrated_polynomial() {
        let mut p = ArimaParams {
            order: order(1, 1, 0),
            ar: vec![0.5],
            ma: vec![],
            seasonal_ar: vec![],
            seasonal_ma: vec![],
            mean: None,
            history: vec![],
            recent_residuals: vec![],
        };
        // (1 - 0.5B)(1 - B) = 1 - 1.5B + 0.5B^2
        assert_eq!(p.integrated_ar(), vec![1.5, -0.5]);
        p.order.d = 0;
        p.order.seasonal_d = 1;
        let psi = p.integrated_ar();
        assert_eq!(psi.len(), 8);
        assert_eq!((psi[0], psi[6], psi[7]), (0.5, 1.0, -0.5));
    }

    #[test]
    fn recovers_ar1() {
        let m = fit_arima_auto(&series(ar1(0.7, 500, 11, 50.0)), &ArimaConfig::default()).unwrap();
        let ModelParams::Arima(p) = &m.params else { panic!() };
        assert_eq!(p.order.d, 0, "{p}");
        assert!(p.order.p >= 1, "{p}");
        assert!((0.6..=0.8).contains(&p.ar[0]), "{p} {:?}", p.ar);
    }

    #[test]
    fn random_walk_is_differenced() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut level = 500.0;
        let y: Vec<f64> = (0..500)
            .map(|_| {
                level += 3.0 * f64::standard_normal(&mut rng);
                level
            })
            .collect();
        let m = fit_arima_auto(&series(y), &ArimaConfig::default()).unwrap();
        let ModelParams::Arima(p) = &m.params else { panic!() };
        assert!(p.order.d >= 1, "{p}");
    }

    #[test]
    fn white_noise_forecasts_near_mean() {
        let y = ar1(0.0, 300, 8, 20.0);
        let avg = y.iter().sum::<f64>() / y.len() as f64;
        let m = fit_arima_auto(&series(y), &ArimaConfig::default()).unwrap();
        let pf = m.point_forecast(10).unwrap();
        assert!(pf.iter().all(|v| (v - avg).abs() < 0.3), "{pf:?} vs {avg}");
    }

    #[test]
    fn update_with_same_data_reproduces_state() {
        let s = series(ar1(0.5, 120, 3, 30.0));
        let m = fit_arima_auto(&s, &ArimaConfig::default()).unwrap();
        assert_eq!(update(&m, &s).unwrap(), m);
    }
}
