use chrono::{Days, NaiveDate};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Monte Carlo forecast on the original count scale.
///
/// Horizons are 1-based throughout: `h = 1` is the day after `origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastDistribution<T> {
    origin: NaiveDate,
    paths: Vec<Vec<T>>,
    sorted: Vec<Vec<T>>,
}

impl<T: Scalar> ForecastDistribution<T> {
    /// `paths[m][h - 1]` is the value of path `m` at horizon `h`.
    pub fn from_paths(origin: NaiveDate, paths: Vec<Vec<T>>) -> Result<Self> {
        let horizon = paths.first().map(Vec::len).unwrap_or(0);
        if paths.is_empty() || horizon == 0 {
            return Err(Error::Data("forecast needs at least one path and horizon".into()));
        }
        if paths.iter().any(|p| p.len() != horizon) {
            return Err(Error::Data("forecast paths have unequal lengths".into()));
        }
        if paths.iter().flatten().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::Data(
                "forecast path values must be finite and nonnegative".into(),
            ));
        }
        let sorted = (0..horizon)
            .map(|h| {
                let mut col: Vec<T> = paths.iter().map(|p| p[h]).collect();
                col.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                col
            })
            .collect();
        Ok(Self {
            origin,
            paths,
            sorted,
        })
    }

    pub fn origin(&self) -> NaiveDate {
        self.origin
    }

    pub fn horizon(&self) -> usize {
        self.sorted.len()
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn paths(&self) -> &[Vec<T>] {
        &self.paths
    }

    pub fn date(&self, h: usize) -> NaiveDate {
        self.origin + Days::new(h as u64)
    }

    /// Sorted samples at horizon `h`.
    pub fn samples(&self, h: usize) -> &[T] {
        &self.sorted[h - 1]
    }

    /// Quantile at probability `p` by linear interpolation between order
    /// statistics (position `p * (M - 1)`).
    pub fn quantile(&self, p: T, h: usize) -> T {
        let xs = self.samples(h);
        let p = p.max(T::zero()).min(T::one());
        let pos = p * T::of(xs.len() - 1);
        let lo = pos.floor();
        let i = lo.to_usize().unwrap_or(0).min(xs.len() - 1);
        let frac = pos - lo;
        if i + 1 >= xs.len() || frac == T::zero() {
            xs[i]
        } else {
            // convex combination keeps the result inside [xs[i], xs[i+1]]
            xs[i] + frac * (xs[i + 1] - xs[i])
        }
    }

    /// The `i`-th percentile, `i` in 1..=99.
    pub fn percentile(&self, i: usize, h: usize) -> Result<T> {
        if !(1..=99).contains(&i) {
            return Err(Error::Score(format!("percentile {i} outside 1..=99")));
        }
        Ok(self.quantile(T::of(i) / T::lit(100.0), h))
    }

    /// All 99 percentiles at horizon `h`.
    pub fn percentiles(&self, h: usize) -> Vec<T> {
        (1..=99)
            .map(|i| self.quantile(T::of(i) / T::lit(100.0), h))
            .collect()
    }

    pub fn mean(&self, h: usize) -> T {
        let xs = self.samples(h);
        xs.iter().copied().sum::<T>() / T::of(xs.len())
    }

    pub fn median(&self, h: usize) -> T {
        self.quantile(T::lit(0.5), h)
    }

    /// Central interval with coverage `level`, e.g. 0.95.
    pub fn interval(&self, level: T, h: usize) -> (T, T) {
        let tail = (T::one() - level) / T::lit(2.0);
        (self.quantile(tail, h), self.quantile(T::one() - tail, h))
    }

    /// Per-horizon sample means.
    pub fn means(&self) -> Vec<T> {
        (1..=self.horizon()).map(|h| self.mean(h)).collect()
    }
}
