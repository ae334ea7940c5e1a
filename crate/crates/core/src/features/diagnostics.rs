//! Sample autocorrelation, partial autocorrelation and cross-correlation.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::{mean, Scalar};
use crate::series::{check_aligned, DailySeries};

fn centered<T: Scalar>(xs: &[T]) -> Vec<T> {
    let m = mean(xs).unwrap_or_else(T::zero);
    xs.iter().map(|&x| x - m).collect()
}

/// Sum of `a[i] * b[j]` over all pairs with `i - j = lag`, accumulated in
/// ascending order of `min(i, j)`. Products commute exactly, so swapping the
/// arguments and negating the lag yields the same bits.
fn lagged_cross_sum<T: Scalar>(a: &[T], b: &[T], lag: i64) -> T {
    let n = a.len().min(b.len());
    let k = lag.unsigned_abs() as usize;
    if k >= n {
        return T::zero();
    }
    let mut acc = T::zero();
    for s in 0..n - k {
        let (i, j) = if lag >= 0 { (s + k, s) } else { (s, s + k) };
        acc = acc + a[i] * b[j];
    }
    acc
}

fn check_lags<T: Scalar>(xs: &[T], max_lag: usize) -> Result<Vec<T>> {
    if max_lag < 1 || xs.len() <= max_lag {
        return Err(Error::Data(format!(
            "need 1 <= max_lag < length, got max_lag={max_lag}, length={}",
            xs.len()
        )));
    }
    let c = centered(xs);
    let c0 = lagged_cross_sum(&c, &c, 0);
    if !(c0 > T::zero()) {
        return Err(Error::DegenerateSeries(
            "series has zero variance".to_string(),
        ));
    }
    Ok(c)
}

/// Autocorrelations for lags `0..=max_lag`, lag-0 variance denominator.
pub fn acf<T: Scalar>(xs: &[T], max_lag: usize) -> Result<Vec<T>> {
    let c = check_lags(xs, max_lag)?;
    let c0 = lagged_cross_sum(&c, &c, 0);
    Ok((0..=max_lag)
        .map(|k| {
            if k == 0 {
                T::one()
            } else {
                lagged_cross_sum(&c, &c, k as i64) / c0
            }
        })
        .collect())
}

/// Partial autocorrelations for lags `1..=max_lag` (element `k - 1` holds lag
/// `k`), from the Durbin-Levinson recursion on the sample autocorrelations.
pub fn pacf<T: Scalar>(xs: &[T], max_lag: usize) -> Result<Vec<T>> {
    let r = acf(xs, max_lag)?;
    Ok(pacf_from_acf(&r))
}

/// Durbin-Levinson recursion. `r[0]` must be 1.
pub fn pacf_from_acf<T: Scalar>(r: &[T]) -> Vec<T> {
    let max_lag = r.len().saturating_sub(1);
    let mut out = Vec::with_capacity(max_lag);
    let mut phi: Vec<T> = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        let (num, den) = phi.iter().enumerate().fold(
            (r[k], T::one()),
            |(num, den), (j, &p)| (num - p * r[k - 1 - j], den - p * r[j + 1]),
        );
        let kk = (num / den).max(-T::one()).min(T::one());
        let prev = phi.clone();
        for j in 0..prev.len() {
            phi[j] = prev[j] - kk * prev[prev.len() - 1 - j];
        }
        phi.push(kk);
        out.push(kk);
    }
    out
}

/// Cross-correlation `corr(x[t + k], y[t])` for `k` in `-max_lag..=max_lag`.
/// A negative `k` means `x` leads `y`.
pub fn ccf<T: Scalar>(
    x: &DailySeries<T>,
    y: &DailySeries<T>,
    max_lag: usize,
) -> Result<BTreeMap<i64, T>> {
    check_aligned(x, y)?;
    ccf_values(x.values(), y.values(), max_lag)
}

/// Slice form of [`ccf`]; the inputs must have equal length.
pub fn ccf_values<T: Scalar>(x: &[T], y: &[T], max_lag: usize) -> Result<BTreeMap<i64, T>> {
    if x.len() != y.len() {
        return Err(Error::Alignment(format!(
            "ccf inputs have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    let cx = check_lags(x, max_lag)?;
    let cy = check_lags(y, max_lag)?;
    let denom = (lagged_cross_sum(&cx, &cx, 0) * lagged_cross_sum(&cy, &cy, 0)).sqrt();
    let m = max_lag as i64;
    Ok((-m..=m)
        .map(|k| (k, lagged_cross_sum(&cx, &cy, k) / denom))
        .collect())
}

/// Approximate 95% white-noise band `2 / sqrt(n)`.
pub fn white_noise_band(n: usize) -> f64 {
    2.0 / (n as f64).sqrt()
}

/// Write `lag,value,lower,upper` rows for plotting a correlogram.
pub fn write_correlogram_csv<T: Scalar, W: Write>(
    out: W,
    points: impl IntoIterator<Item = (i64, T)>,
    n: usize,
) -> Result<()> {
    let band = white_noise_band(n);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lag", "value", "lower", "upper"])
        .map_err(csv_err)?;
    for (lag, v) in points {
        w.write_record([
            lag.to_string(),
            v.to_f64_lossy().to_string(),
            (-band).to_string(),
            band.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const SEED_A: u64 = 1;
    const SEED_B: u64 = 3;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| f64::standard_normal(&mut rng)).collect()
    }

    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let e = noise(n + 200, seed);
        let mut x = 0.0;
        let mut out = Vec::with_capacity(n);
        for (t, eps) in e.into_iter().enumerate() {
            x = phi * x + eps;
            if t >= 200 {
                out.push(x);
            }
        }
        out
    }

    #[test]
    fn acf_lag_zero_is_one() {
        let r = acf(&[1.0, 3.0, 2.0, 5.0, 4.0], 2).unwrap();
        assert_eq!(r[0], 1.0);
        assert!(r.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn acf_of_white_noise_within_band() {
        let x = noise(2000, 7);
        let r = acf(&x, 5).unwrap();
        assert!(r[1].abs() < white_noise_band(2000));
    }

    #[test]
    fn acf_pacf_of_ar1() {
        let x = ar1(0.5, 5000, 11);
        let r = acf(&x, 3).unwrap();
        assert!((0.45..=0.55).contains(&r[1]), "r1 = {}", r[1]);
        let p = pacf(&x, 3).unwrap();
        assert_eq!(p[0], r[1]);
        assert!(p[1].abs() <= 0.05, "pacf(2) = {}", p[1]);
    }

    #[test]
    fn pacf_of_white_noise_within_band() {
        let band = white_noise_band(2000);
        let p = pacf(&noise(2000, SEED_A), 10).unwrap();
        assert!(p.iter().all(|v| v.abs() < band), "{p:?}");

        // each lag leaves the band ~5% of the time
        let mut outside = 0;
        for seed in 0..40 {
            let p = pacf(&noise(2000, 1000 + seed), 10).unwrap();
            outside += p.iter().filter(|v| v.abs() >= band).count();
        }
        assert!(outside <= 40, "{outside} of 400");
    }

    #[test]
    fn zero_variance_is_rejected() {
        assert!(matches!(
            acf(&[2.0, 2.0, 2.0], 1),
            Err(Error::DegenerateSeries(_))
        ));
        assert!(acf(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn ccf_self_and_shift() {
        let x = noise(300, 5);
        let c = ccf_values(&x, &x, 3).unwrap();
        assert!((c[&0] - 1.0).abs() < 1e-12);

        // y[t] = x[t - 7]: x leads by 7, so the peak is at k = -7. The biased
        // estimator divides by the full-length variance, so the peak value is
        // (n - 7) / n up to sampling noise rather than exactly 1.
        let n = 400;
        let base = noise(n + 7, 9);
        let x = &base[7..];
        let y = &base[..n];
        let c = ccf_values(x, y, 10).unwrap();
        let (arg, val) = c
            .iter()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        assert_eq!(*arg, -7);
        assert!((val - 1.0).abs() < 0.03, "{val}");
    }

    #[test]
    fn ccf_independent_noise_is_small() {
        let c = ccf_values(&noise(2000, SEED_A), &noise(2000, SEED_B), 10).unwrap();
        assert!(c.values().all(|v| v.abs() < 0.05), "{c:?}");

        // |ccf| >= 0.05 is a 2.2 sd event; over many pairs the rate stays low
        let mut outside = 0;
        for seed in 0..20 {
            let c = ccf_values(&noise(2000, 2 * seed), &noise(2000, 2 * seed + 1), 10).unwrap();
            outside += c.values().filter(|v| v.abs() >= 0.05).count();
        }
        assert!(outside <= 25, "{outside} of 420");
    }

    #[test]
    fn ccf_is_exactly_antisymmetric_in_lag() {
        let x = noise(120, 4);
        let y = noise(120, 8);
        let xy = ccf_values(&x, &y, 12).unwrap();
        let yx = ccf_values(&y, &x, 12).unwrap();
        for k in -12..=12 {
            assert_eq!(xy[&k].to_bits(), yx[&-k].to_bits());
        }
    }

    #[test]
    fn ccf_rejects_misaligned_calendars() {
        let d = NaiveDate::from_ymd_opt(2020, 3, 18).unwrap();
        let a = DailySeries::new("a", d, vec![1.0, 2.0, 4.0]).unwrap();
        let b = DailySeries::new("b", d.succ_opt().unwrap(), vec![1.0, 2.0, 4.0]).unwrap();
        assert!(matches!(ccf(&a, &b, 1), Err(Error::Alignment(_))));
    }

    #[test]
    fn works_in_single_precision() {
        let x: Vec<f32> = ar1(0.5, 3000, 2).into_iter().map(|v| v as f32).collect();
        let r = acf(&x, 1).unwrap();
        assert!((r[1] - 0.5).abs() < 0.06);
    }

    #[test]
    fn correlogram_csv_shape() {
        let mut buf = Vec::new();
        write_correlogram_csv(&mut buf, vec![(0i64, 1.0f64), (1, 0.5)], 100).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "lag,value,lower,upper");
        assert_eq!(lines[2], "1,0.5,-0.2,0.2");
    }
}
