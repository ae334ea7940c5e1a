//! Point, interval and quantile scores.
//!
//! Errors are `forecast - actual`, so over-forecasting gives a positive ME.

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::models::ForecastDistribution;
use crate::scalar::Scalar;

/// Interval score for a central `(1 - alpha)` interval `[l, u]`: its width,
/// plus `2/alpha` times the distance by which `y` falls outside.
pub fn winkler<T: Scalar>(l: T, u: T, y: T, alpha: T) -> Result<T> {
    if !(l <= u) {
        return Err(Error::Score(format!("interval lower bound {l} exceeds upper {u}")));
    }
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::Score(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let width = u - l;
    let penalty = T::lit(2.0) / alpha;
    Ok(if y < l {
        width + penalty * (l - y)
    } else if y > u {
        width + penalty * (y - u)
    } else {
        width
    })
}

/// Pinball loss of quantile `q` at level `i / 100`.
pub fn pinball<T: Scalar>(i: usize, q: T, y: T) -> Result<T> {
    if !(1..=99).contains(&i) {
        return Err(Error::Score(format!("percentile {i} outside 1..=99")));
    }
    let tau = T::of(i) / T::lit(100.0);
    Ok(if y < q {
        (T::one() - tau) * (q - y)
    } else {
        tau * (y - q)
    })
}

/// One scored forecast: a model's distribution at one origin and horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord<T> {
    pub model: String,
    /// Index of the last observation used.
    pub origin: usize,
    pub origin_date: NaiveDate,
    pub h: usize,
    pub actual: T,
    pub mean: T,
    pub median: T,
    pub lower: T,
    pub upper: T,
    /// Percentiles 1..=99.
    pub quantiles: Vec<T>,
}

impl<T: Scalar> ScoreRecord<T> {
    /// Summarize `f` at horizon `h` with a central interval of level
    /// `1 - alpha`.
    pub fn from_distribution(
        model: impl Into<String>,
        origin: usize,
        f: &ForecastDistribution<T>,
        h: usize,
        actual: T,
        alpha: T,
    ) -> Self {
        let (lower, upper) = f.interval(T::one() - alpha, h);
        Self {
            model: model.into(),
            origin,
            origin_date: f.origin(),
            h,
            actual,
            mean: f.mean(h),
            median: f.median(h),
            lower,
            upper,
            quantiles: f.percentiles(h),
        }
    }

    pub fn winkler(&self, alpha: T) -> Result<T> {
        winkler(self.lower, self.upper, self.actual, alpha)
    }
}

/// Mean pinball loss over percentiles 1..=99.
pub fn percentile_score<T: Scalar>(record: &ScoreRecord<T>) -> Result<T> {
    if record.quantiles.len() != 99 {
        return Err(Error::Score(format!(
            "expected 99 quantiles, got {}",
            record.quantiles.len()
        )));
    }
    let mut total = T::zero();
    for (i, &q) in record.quantiles.iter().enumerate() {
        total = total + pinball(i + 1, q, record.actual)?;
    }
    Ok(total / T::lit(99.0))
}

/// Quantile-grid CRPS, twice the percentile score.
pub fn crps<T: Scalar>(record: &ScoreRecord<T>) -> Result<T> {
    Ok(T::lit(2.0) * percentile_score(record)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointScores<T> {
    pub me: T,
    pub mae: T,
    pub rmse: T,
}

/// ME and RMSE use the distribution mean, MAE the median.
pub fn point_scores<T: Scalar>(records: &[ScoreRecord<T>]) -> Result<PointScores<T>> {
    if records.is_empty() {
        return Err(Error::Score("no records to score".into()));
    }
    let n = T::of(records.len());
    let mut me = T::zero();
    let mut mae = T::zero();
    let mut mse = T::zero();
    for r in records {
        let e = r.mean - r.actual;
        me = me + e;
        mse = mse + e * e;
        mae = mae + (r.median - r.actual).abs();
    }
    Ok(PointScores {
        me: me / n,
        mae: mae / n,
        rmse: (mse / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(actual: f64, quantiles: Vec<f64>) -> ScoreRecord<f64> {
        ScoreRecord {
            model: "m".into(),
            origin: 0,
            origin_date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            h: 1,
            actual,
            mean: actual,
            median: actual,
            lower: actual,
            upper: actual,
            quantiles,
        }
    }

    fn point(mean: f64, actual: f64) -> ScoreRecord<f64> {
        ScoreRecord {
            mean,
            median: mean,
            ..record(actual, vec![])
        }
    }

    #[test]
    fn winkler_branches() {
        assert_eq!(winkler(10.0, 20.0, 15.0, 0.05).unwrap(), 10.0);
        assert_eq!(winkler(10.0, 20.0, 5.0, 0.05).unwrap(), 210.0);
        assert_eq!(winkler(10.0, 20.0, 25.0, 0.05).unwrap(), 210.0);
        assert!(winkler(20.0, 10.0, 15.0, 0.05).is_err());
        assert!(winkler(10.0, 20.0, 15.0, 0.0).is_err());
    }

    #[test]
    fn pinball_branches() {
        assert_eq!(pinball(50, 10.0, 12.0).unwrap(), 1.0);
        assert!((pinball(90, 10.0f64, 12.0).unwrap() - 1.8).abs() < 1e-12);
        assert!((pinball(10, 10.0f64, 8.0).unwrap() - 1.8).abs() < 1e-12);
        assert!(pinball(0, 1.0, 1.0).is_err());
        assert!(pinball(100, 1.0, 1.0).is_err());
    }

    #[test]
    fn percentile_examples() {
        assert_eq!(percentile_score(&record(5.0, vec![5.0; 99])).unwrap(), 0.0);
        let shifted = percentile_score(&record(5.0, vec![7.0; 99])).unwrap();
        assert!((shifted - 1.0).abs() < 1e-12, "{shifted}");
        assert!(percentile_score(&record(5.0, vec![5.0; 98])).is_err());
    }

    #[test]
    fn point_examples() {
        let s = point_scores(&[point(12.0, 10.0)]).unwrap();
        assert_eq!((s.me, s.mae, s.rmse), (2.0, 2.0, 2.0));
        let s = point_scores(&[point(10.0, 12.0), point(14.0, 12.0)]).unwrap();
        assert_eq!((s.me, s.mae, s.rmse), (0.0, 2.0, 2.0));
        let s = point_scores(&[point(3.0, 3.0)]).unwrap();
        assert_eq!((s.me, s.mae, s.rmse), (0.0, 0.0, 0.0));
        assert!(point_scores::<f64>(&[]).is_err());
    }

    proptest! {
        #[test]
        fn pinball_nonnegative(i in 1usize..100, q in -50.0f64..50.0, y in -50.0f64..50.0) {
            let v = pinball(i, q, y).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert_eq!(v == 0.0, q == y);
        }

        #[test]
        fn winkler_width_inside_and_continuous(l in -10.0f64..10.0, w in 0.0f64..10.0, t in 0.0f64..=1.0) {
            let u = l + w;
            let y = l + t * w;
            prop_assert_eq!(winkler(l, u, y, 0.05).unwrap(), u - l);
            let eps = 1e-9;
            prop_assert!((winkler(l, u, l - eps, 0.05).unwrap() - (u - l)).abs() < 1e-6);
            prop_assert!((winkler(l, u, u + eps, 0.05).unwrap() - (u - l)).abs() < 1e-6);
        }

        #[test]
        fn widening_a_covering_interval_costs(l in -10.0f64..10.0, w in 0.1f64..10.0, extra in 0.01f64..5.0) {
            let y = l + w / 2.0;
            let narrow = winkler(l, l + w, y, 0.05).unwrap();
            let wide = winkler(l - extra, l + w, y, 0.05).unwrap();
            prop_assert!(wide > narrow);
        }
    }
}
