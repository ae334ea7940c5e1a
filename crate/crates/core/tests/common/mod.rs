#![allow(dead_code)]

use callcast::series::{is_weekend, DailySeries};
use callcast::Scalar;
use chrono::{Days, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 3, 18).unwrap()
}

/// Synthetic cases/calls pair: calls follow ARIMA(1,1,0) and
/// `ln(cases + 1)` is a linear trend plus a lag-7 call effect, a weekend
/// dip and AR(1) noise.
pub struct Synthetic {
    pub n: usize,
    pub calls_level: f64,
    pub calls_phi: f64,
    pub calls_sd: f64,
    pub intercept: f64,
    pub trend: f64,
    pub call_effect: f64,
    pub call_lag: usize,
    pub weekend_dip: f64,
    pub noise_phi: f64,
    pub noise_sd: f64,
}

impl Default for Synthetic {
    fn default() -> Self {
        Self {
            n: 186,
            calls_level: 300.0,
            calls_phi: 0.5,
            calls_sd: 10.0,
            intercept: 3.0,
            trend: 0.004,
            call_effect: 0.003,
            call_lag: 7,
            weekend_dip: 0.3,
            noise_phi: 0.6,
            noise_sd: 0.1,
        }
    }
}

impl Synthetic {
    pub fn generate(&self, seed: u64) -> (DailySeries<f64>, DailySeries<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pre = 30;
        let total = self.n + pre;
        let mut calls = Vec::with_capacity(total);
        let mut level = self.calls_level;
        let mut step = 0.0;
        for _ in 0..total {
            step = self.calls_phi * step + self.calls_sd * f64::standard_normal(&mut rng);
            level = (level + step).max(0.0);
            calls.push(level.round());
        }
        let mut u = 0.0;
        let mut cases = Vec::with_capacity(self.n);
        for t in 0..self.n {
            u = self.noise_phi * u + self.noise_sd * f64::standard_normal(&mut rng);
            let date = start() + Days::new(t as u64);
            let weekend = if is_weekend(date) { self.weekend_dip } else { 0.0 };
            let log = self.intercept + self.trend * t as f64
                + self.call_effect * calls[pre + t - self.call_lag]
                - weekend
                + u;
            cases.push((log.exp() - 1.0).max(0.0).round());
        }
        (
            DailySeries::new("cases", start(), cases).unwrap(),
            DailySeries::new("calls", start(), calls[pre..].to_vec()).unwrap(),
        )
    }
}
