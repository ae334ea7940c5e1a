//! Candidate regressors of the case-count regression and their realization
//! as a numeric design matrix.
//!
//! The response is `shifted_log(cases[t])`. Available regressors are an
//! intercept, a linear day-index trend, a weekend dummy, log cases at lags
//! 1..=21, and raw call counts at lag 0 and lags 5..=30.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::{check_aligned, is_weekend, shifted_log_unchecked, DailySeries};

pub const MAX_CASES_LAG: usize = 21;
pub const MIN_CALLS_LAG: usize = 5;
pub const MAX_CALLS_LAG: usize = 30;

/// One regressor. The derived ordering is the canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Intercept,
    Trend,
    Weekend,
    CasesLag(usize),
    CallsLag(usize),
}

impl Term {
    pub fn is_calls(&self) -> bool {
        matches!(self, Term::CallsLag(_))
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Term::CasesLag(k) if !(1..=MAX_CASES_LAG).contains(&k) => Err(Error::Spec(format!(
                "cases lag {k} outside 1..={MAX_CASES_LAG}"
            ))),
            Term::CallsLag(k) if k != 0 && !(MIN_CALLS_LAG..=MAX_CALLS_LAG).contains(&k) => {
                Err(Error::Spec(format!(
                    "calls lag {k} outside {{0}} and {MIN_CALLS_LAG}..={MAX_CALLS_LAG}"
                )))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Intercept => f.write_str("intercept"),
            Term::Trend => f.write_str("trend"),
            Term::Weekend => f.write_str("weekend"),
            Term::CasesLag(k) => write!(f, "cases_lag{k}"),
            Term::CallsLag(k) => write!(f, "calls_lag{k}"),
        }
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lag = |rest: &str| {
            rest.parse::<usize>()
                .map_err(|_| Error::Spec(format!("bad term '{s}'")))
        };
        let term = match s {
            "intercept" => Term::Intercept,
            "trend" => Term::Trend,
            "weekend" => Term::Weekend,
            _ => {
                if let Some(rest) = s.strip_prefix("cases_lag") {
                    Term::CasesLag(lag(rest)?)
                } else if let Some(rest) = s.strip_prefix("calls_lag") {
                    Term::CallsLag(lag(rest)?)
                } else {
                    return Err(Error::Spec(format!("unknown term '{s}'")));
                }
            }
        };
        term.validate()?;
        Ok(term)
    }
}

impl Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which regressors enter the model.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub include_intercept: bool,
    pub include_trend: bool,
    pub include_weekend: bool,
    pub ar_lags: BTreeSet<usize>,
    pub call_lags: BTreeSet<usize>,
}

impl FeatureSpec {
    pub fn intercept_only() -> Self {
        Self {
            include_intercept: true,
            ..Self::default()
        }
    }

    /// Every admissible term, in canonical order.
    pub fn all_candidates() -> Vec<Term> {
        let mut v = vec![Term::Intercept, Term::Trend, Term::Weekend];
        v.extend((1..=MAX_CASES_LAG).map(Term::CasesLag));
        v.push(Term::CallsLag(0));
        v.extend((MIN_CALLS_LAG..=MAX_CALLS_LAG).map(Term::CallsLag));
        v
    }

    pub fn from_terms<I: IntoIterator<Item = Term>>(terms: I) -> Result<Self> {
        let mut spec = Self::default();
        for t in terms {
            spec.insert(t)?;
        }
        Ok(spec)
    }

    pub fn insert(&mut self, term: Term) -> Result<()> {
        term.validate()?;
        match term {
            Term::Intercept => self.include_intercept = true,
            Term::Trend => self.include_trend = true,
            Term::Weekend => self.include_weekend = true,
            Term::CasesLag(k) => {
                self.ar_lags.insert(k);
            }
            Term::CallsLag(k) => {
                self.call_lags.insert(k);
            }
        }
        Ok(())
    }

    pub fn with(&self, term: Term) -> Result<Self> {
        let mut s = self.clone();
        s.insert(term)?;
        Ok(s)
    }

    pub fn contains(&self, term: Term) -> bool {
        match term {
            Term::Intercept => self.include_intercept,
            Term::Trend => self.include_trend,
            Term::Weekend => self.include_weekend,
            Term::CasesLag(k) => self.ar_lags.contains(&k),
            Term::CallsLag(k) => self.call_lags.contains(&k),
        }
    }

    /// The same spec with every calls term removed.
    pub fn without_calls(&self) -> Self {
        Self {
            call_lags: BTreeSet::new(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.terms_unchecked().iter().try_for_each(Term::validate)
    }

    fn terms_unchecked(&self) -> Vec<Term> {
        let mut v = Vec::new();
        if self.include_intercept {
            v.push(Term::Intercept);
        }
        if self.include_trend {
            v.push(Term::Trend);
        }
        if self.include_weekend {
            v.push(Term::Weekend);
        }
        v.extend(self.ar_lags.iter().map(|&k| Term::CasesLag(k)));
        v.extend(self.call_lags.iter().map(|&k| Term::CallsLag(k)));
        v
    }

    /// Columns in canonical order.
    pub fn terms(&self) -> Vec<Term> {
        self.terms_unchecked()
    }

    pub fn max_lag(&self) -> usize {
        self.ar_lags
            .iter()
            .chain(self.call_lags.iter())
            .copied()
            .max()
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.terms_unchecked().is_empty()
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.terms().iter().map(Term::to_string).collect();
        f.write_str(&names.join(" + "))
    }
}

/// Source of values for one regressor row: log cases and raw calls at a
/// time index, or `None` when neither an observation nor a proxy exists.
pub(crate) trait RegressorSource<T> {
    fn log_cases(&self, t: usize) -> Option<T>;
    fn calls(&self, t: usize) -> Option<T>;
}

/// Evaluate the regressors of `terms` at time index `t` (days since `start`).
pub(crate) fn regressor_row<T: Scalar, S: RegressorSource<T>>(
    terms: &[Term],
    t: usize,
    start: NaiveDate,
    src: &S,
) -> Result<Vec<T>> {
    terms
        .iter()
        .map(|&term| {
            let missing = || {
                Error::Assembly(format!(
                    "no observation or proxy for {term} at time index {t}"
                ))
            };
            let lagged = |k: usize| t.checked_sub(k).ok_or_else(missing);
            Ok(match term {
                Term::Intercept => T::one(),
                Term::Trend => T::of(t),
                Term::Weekend => {
                    if is_weekend(start + Days::new(t as u64)) {
                        T::one()
                    } else {
                        T::zero()
                    }
                }
                Term::CasesLag(k) => src.log_cases(lagged(k)?).ok_or_else(missing)?,
                Term::CallsLag(k) => src.calls(lagged(k)?).ok_or_else(missing)?,
            })
        })
        .collect()
}

struct Observed<'a, T> {
    log_cases: &'a [T],
    calls: &'a [T],
}

impl<T: Scalar> RegressorSource<T> for Observed<'_, T> {
    fn log_cases(&self, t: usize) -> Option<T> {
        self.log_cases.get(t).copied()
    }

    fn calls(&self, t: usize) -> Option<T> {
        self.calls.get(t).copied()
    }
}

/// Realized regressors, one row per usable time index.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<T> {
    columns: Vec<Term>,
    first_index: usize,
    start: NaiveDate,
    data: Vec<T>,
    response: Vec<T>,
}

impl<T: Scalar> DesignMatrix<T> {
    pub fn columns(&self) -> &[Term] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.response.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    /// Time index (days since series start) of row 0.
    pub fn first_index(&self) -> usize {
        self.first_index
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn row(&self, i: usize) -> &[T] {
        let k = self.n_cols();
        &self.data[i * k..(i + 1) * k]
    }

    /// Row-major storage.
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn response(&self) -> &[T] {
        &self.response
    }
}

/// Build the design for `spec` over the aligned `cases`/`calls` history.
/// Rows run from `t = max_lag` to the last index.
pub fn build_design<T: Scalar>(
    cases: &DailySeries<T>,
    calls: &DailySeries<T>,
    spec: &FeatureSpec,
) -> Result<DesignMatrix<T>> {
    check_aligned(cases, calls)?;
    spec.validate()?;
    if spec.is_empty() {
        return Err(Error::Spec("feature spec has no terms".into()));
    }
    let n = cases.len();
    let max_lag = spec.max_lag();
    if n <= max_lag {
        return Err(Error::Data(format!(
            "series of length {n} is too short for maximum lag {max_lag}"
        )));
    }
    let log_cases: Vec<T> = cases
        .values()
        .iter()
        .map(|&v| shifted_log_unchecked(v))
        .collect();
    let src = Observed {
        log_cases: &log_cases,
        calls: calls.values(),
    };
    let columns = spec.terms();
    let mut data = Vec::with_capacity((n - max_lag) * columns.len());
    for t in max_lag..n {
        data.extend(regressor_row(&columns, t, cases.start(), &src)?);
    }
    Ok(DesignMatrix {
        columns,
        first_index: max_lag,
        start: cases.start(),
        data,
        response: log_cases[max_lag..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn d0() -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 3, 18).unwrap()
    }

    fn pair(n: usize) -> (DailySeries<f64>, DailySeries<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cases = (0..n).map(|_| rng.random_range(0..50) as f64).collect();
        let calls = (0..n).map(|_| rng.random_range(100..400) as f64).collect();
        (
            DailySeries::new("cases", d0(), cases).unwrap(),
            DailySeries::new("calls", d0(), calls).unwrap(),
        )
    }

    #[test]
    fn shape_of_small_design() {
        let (cases, calls) = pair(40);
        let spec = FeatureSpec::from_terms([
            Term::Intercept,
            Term::Trend,
            Term::Weekend,
            Term::CasesLag(1),
            Term::CallsLag(5),
        ])
        .unwrap();
        let x = build_design(&cases, &calls, &spec).unwrap();
        assert_eq!((x.n_rows(), x.n_cols()), (35, 5));
        assert_eq!(x.response().len(), 35);
        assert_eq!(
            x.columns(),
            &[
                Term::Intercept,
                Term::Trend,
                Term::Weekend,
                Term::CasesLag(1),
                Term::CallsLag(5)
            ]
        );
    }

    #[test]
    fn rejects_out_of_range_lags() {
        let (cases, calls) = pair(40);
        let mut spec = FeatureSpec::intercept_only();
        spec.ar_lags.insert(22);
        assert!(matches!(
            build_design(&cases, &calls, &spec),
            Err(Error::Spec(_))
        ));
        assert!(FeatureSpec::intercept_only().with(Term::CallsLag(3)).is_err());
        assert!(FeatureSpec::intercept_only().with(Term::CallsLag(31)).is_err());
        assert!(FeatureSpec::intercept_only().with(Term::CasesLag(0)).is_err());
    }

    #[test]
    fn intercept_only_design() {
        let (cases, calls) = pair(12);
        let x = build_design(&cases, &calls, &FeatureSpec::intercept_only()).unwrap();
        assert_eq!((x.n_rows(), x.n_cols()), (12, 1));
        assert!(x.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn too_short_for_lags() {
        let (cases, calls) = pair(30);
        let spec = FeatureSpec::intercept_only().with(Term::CallsLag(30)).unwrap();
        assert!(matches!(
            build_design(&cases, &calls, &spec),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn candidate_set_is_canonical() {
        let c = FeatureSpec::all_candidates();
        assert_eq!(c.len(), 3 + 21 + 1 + 26);
        let mut sorted = c.clone();
        sorted.sort();
        assert_eq!(c, sorted);
        for t in &c {
            assert_eq!(t.to_string().parse::<Term>().unwrap(), *t);
        }
    }

    #[test]
    fn design_is_deterministic() {
        let (cases, calls) = pair(80);
        let spec = FeatureSpec::from_terms(FeatureSpec::all_candidates()).unwrap();
        let a = build_design(&cases, &calls, &spec).unwrap();
        let b = build_design(&cases, &calls, &spec).unwrap();
        let bits = |m: &DesignMatrix<f64>| m.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn rows_match_direct_indexing() {
        let (cases, calls) = pair(90);
        let spec = FeatureSpec::from_terms(FeatureSpec::all_candidates()).unwrap();
        let x = build_design(&cases, &calls, &spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let i = rng.random_range(0..x.n_rows());
            let t = x.first_index() + i;
            let row = x.row(i);
            for (j, term) in x.columns().iter().enumerate() {
                let expected = match *term {
                    Term::Intercept => 1.0,
                    Term::Trend => t as f64,
                    Term::Weekend => {
                        let wd = chrono::Datelike::weekday(&cases.date_at(t));
                        f64::from(u8::from(matches!(
                            wd,
                            chrono::Weekday::Sat | chrono::Weekday::Sun
                        )))
                    }
                    Term::CasesLag(k) => (cases.values()[t - k] + 1.0).ln(),
                    Term::CallsLag(k) => calls.values()[t - k],
                };
                assert!(
                    (row[j] - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                    "{term} at t={t}"
                );
            }
            assert!((x.response()[i] - (cases.values()[t] + 1.0).ln()).abs() < 1e-12);
        }
    }
}
