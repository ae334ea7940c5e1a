//! Calendar-indexed daily count series, the log transform used for the
//! regression response, and train/test splitting.

use chrono::{Datelike, Days, NaiveDate, Weekday};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Contiguous daily series of nonnegative counts. Value `i` belongs to
/// `start + i` days.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries<T> {
    name: String,
    start: NaiveDate,
    values: Vec<T>,
}

impl<T: Scalar> DailySeries<T> {
    pub fn new(name: impl Into<String>, start: NaiveDate, values: Vec<T>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::InvalidSeries(format!("series '{name}' is empty")));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < T::zero())
        {
            return Err(Error::InvalidSeries(format!(
                "series '{name}' has invalid value {v} at index {i} (must be finite and >= 0)"
            )));
        }
        Ok(Self {
            name,
            start,
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; a series holds at least one value.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Calendar date of index `i`.
    pub fn date_at(&self, i: usize) -> NaiveDate {
        self.start + Days::new(i as u64)
    }

    pub fn end(&self) -> NaiveDate {
        self.date_at(self.len() - 1)
    }

    /// The first `n` observations.
    pub fn head(&self, n: usize) -> Result<Self> {
        self.slice(0, n)
    }

    /// Observations `from..to`, keeping calendar alignment.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self> {
        if from >= to || to > self.len() {
            return Err(Error::InvalidSeries(format!(
                "slice {from}..{to} out of range for series of length {}",
                self.len()
            )));
        }
        Ok(Self {
            name: self.name.clone(),
            start: self.date_at(from),
            values: self.values[from..to].to_vec(),
        })
    }

    /// Append `other`, which must start the day after `self` ends.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let expected = self.end() + Days::new(1);
        if other.start != expected {
            return Err(Error::Alignment(format!(
                "cannot append series starting {} to one ending {}",
                other.start,
                self.end()
            )));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(Self {
            name: self.name.clone(),
            start: self.start,
            values,
        })
    }

    /// Same start date and length.
    pub fn aligned_with(&self, other: &Self) -> bool {
        self.start == other.start && self.len() == other.len()
    }

    /// Apply `shifted_log` elementwise. The result is still a valid series.
    pub fn log_transformed(&self) -> Self {
        Self {
            name: self.name.clone(),
            start: self.start,
            values: self.values.iter().map(|&v| shifted_log_unchecked(v)).collect(),
        }
    }
}

impl<T> AsRef<[T]> for DailySeries<T> {
    fn as_ref(&self) -> &[T] {
        &self.values
    }
}

/// Fail unless both series share a calendar.
pub fn check_aligned<T: Scalar>(a: &DailySeries<T>, b: &DailySeries<T>) -> Result<()> {
    if a.aligned_with(b) {
        Ok(())
    } else {
        Err(Error::Alignment(format!(
            "'{}' covers {}..{} but '{}' covers {}..{}",
            a.name(),
            a.start(),
            a.end(),
            b.name(),
            b.start(),
            b.end()
        )))
    }
}

/// `ln(value + 1)`.
pub fn shifted_log<T: Scalar>(value: T) -> Result<T> {
    if value < T::zero() || value.is_nan() {
        return Err(Error::Domain(format!(
            "shifted_log requires a nonnegative value, got {value}"
        )));
    }
    Ok(shifted_log_unchecked(value))
}

#[inline]
pub(crate) fn shifted_log_unchecked<T: Scalar>(value: T) -> T {
    value.ln_1p()
}

/// `max(exp(x) - 1, 0)`.
#[inline]
pub fn inverse_shifted_log<T: Scalar>(x: T) -> T {
    x.exp_m1().max(T::zero())
}

/// Fraction of a series used for training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    train_fraction: f64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Split(format!(
                "train fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        Ok(Self { train_fraction })
    }

    pub fn train_fraction(&self) -> f64 {
        self.train_fraction
    }

    /// `(train_len, test_len)` for a series of length `n`.
    pub fn lengths(&self, n: usize) -> Result<(usize, usize)> {
        let train = (self.train_fraction * n as f64).floor() as usize;
        let test = n.saturating_sub(train);
        if train == 0 || test == 0 {
            return Err(Error::Split(format!(
                "fraction {} of {n} observations leaves train={train}, test={test}",
                self.train_fraction
            )));
        }
        Ok((train, test))
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
        }
    }
}

pub fn split<T: Scalar>(
    series: &DailySeries<T>,
    spec: SplitSpec,
) -> Result<(DailySeries<T>, DailySeries<T>)> {
    if series.len() < 2 {
        return Err(Error::Split(format!(
            "need at least 2 observations to split, got {}",
            series.len()
        )));
    }
    let (train_len, _) = spec.lengths(series.len())?;
    Ok((
        series.slice(0, train_len)?,
        series.slice(train_len, series.len())?,
    ))
}

/// Saturday or Sunday.
pub fn is_weekend(date: NaiveDate) -> bool {
    matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}
