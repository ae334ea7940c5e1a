//! Ordinary least squares on a design matrix, solved by Householder QR.

use chrono::Days;
use serde::{Deserialize, Serialize};

use super::{information_criteria, FittedModel, ModelParams, TrainingMeta, Transform};
use crate::error::{Error, Result};
use crate::features::{DesignMatrix, FeatureSpec, Term};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MlrParams<T> {
    /// Design columns, in the order of `coefficients`.
    pub terms: Vec<Term>,
    pub coefficients: Vec<T>,
}

impl<T: Scalar> MlrParams<T> {
    pub fn spec(&self) -> FeatureSpec {
        FeatureSpec::from_terms(self.terms.iter().copied())
            .expect("terms came from a validated spec")
    }

    /// Linear predictor for one regressor row.
    pub fn predict_row(&self, row: &[T]) -> T {
        self.coefficients
            .iter()
            .zip(row)
            .fold(T::zero(), |acc, (&b, &x)| acc + b * x)
    }
}

/// Least-squares coefficients for the row-major `n x k` matrix `x`.
///
/// On rank deficiency returns the indices of columns that are (numerically)
/// linear combinations of earlier columns.
pub fn ols_solve<T: Scalar>(
    x: &[T],
    n: usize,
    k: usize,
    y: &[T],
) -> std::result::Result<Vec<T>, Vec<usize>> {
    assert_eq!(x.len(), n * k);
    assert_eq!(y.len(), n);
    // column-major working copy
    let mut a: Vec<Vec<T>> = (0..k).map(|j| (0..n).map(|i| x[i * k + j]).collect()).collect();
    let norms: Vec<T> = a
        .iter()
        .map(|c| c.iter().map(|&v| v * v).sum::<T>().sqrt())
        .collect();
    let mut qty = y.to_vec();
    let tol = T::epsilon().sqrt();
    let mut deficient = Vec::new();
    let mut diag = vec![T::zero(); k];
    let mut row = 0usize;

    for j in 0..k {
        if row >= n {
            deficient.push(j);
            continue;
        }
        let tail_norm = a[j][row..].iter().map(|&v| v * v).sum::<T>().sqrt();
        if !(tail_norm > tol * norms[j]) || norms[j] == T::zero() {
            deficient.push(j);
            continue;
        }
        let alpha = if a[j][row] > T::zero() {
            -tail_norm
        } else {
            tail_norm
        };
        let mut v: Vec<T> = a[j][row..].to_vec();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().map(|&e| e * e).sum::<T>();
        let reflect = |col: &mut [T]| {
            let dot = v
                .iter()
                .zip(col.iter())
                .fold(T::zero(), |acc, (&p, &q)| acc + p * q);
            let f = T::lit(2.0) * dot / vnorm2;
            for (c, &p) in col.iter_mut().zip(&v) {
                *c = *c - f * p;
            }
        };
        for c in a.iter_mut().skip(j + 1) {
            reflect(&mut c[row..]);
        }
        reflect(&mut qty[row..]);
        a[j][row] = alpha;
        for e in a[j][row + 1..].iter_mut() {
            *e = T::zero();
        }
        diag[j] = alpha;
        row += 1;
    }
    if !deficient.is_empty() {
        return Err(deficient);
    }
    // back substitution on R (k x k upper triangle)
    let mut beta = vec![T::zero(); k];
    for j in (0..k).rev() {
        let mut s = qty[j];
        for c in j + 1..k {
            s = s - a[c][j] * beta[c];
        }
        beta[j] = s / diag[j];
    }
    Ok(beta)
}

/// Fit the regression; residual sd is `sqrt(SSE / (n - k))`.
pub fn fit_ols<T: Scalar>(design: &DesignMatrix<T>) -> Result<FittedModel<T>> {
    let (n, k) = (design.n_rows(), design.n_cols());
    if n <= k {
        return Err(Error::Data(format!(
            "regression needs more rows than columns, got {n} x {k}"
        )));
    }
    let beta = ols_solve(design.data(), n, k, design.response()).map_err(|cols| {
        Error::SingularDesign {
            columns: cols
                .into_iter()
                .map(|j| design.columns()[j].to_string())
                .collect(),
        }
    })?;
    let params = MlrParams {
        terms: design.columns().to_vec(),
        coefficients: beta,
    };
    let residuals: Vec<T> = (0..n)
        .map(|i| design.response()[i] - params.predict_row(design.row(i)))
        .collect();
    let sse = residuals.iter().map(|&e| e * e).sum::<T>();
    let (aic, aicc) = information_criteria(sse, n, k + 1);
    let end_index = design.first_index() + n - 1;
    Ok(FittedModel {
        params: ModelParams::Mlr(params),
        residual_sd: (sse / T::of(n - k)).sqrt(),
        residuals,
        training_meta: TrainingMeta {
            n_obs: n,
            end_date: design.start() + Days::new(end_index as u64),
            transform: Transform::ShiftedLog,
            aic,
            aicc,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.7 - 2.0).collect();
        let x: Vec<f64> = xs.iter().flat_map(|&v| [1.0, v]).collect();
        let y: Vec<f64> = xs.iter().map(|&v| 1.0 + 2.0 * v).collect();
        let b = ols_solve(&x, 10, 2, &y).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-8 && (b[1] - 2.0).abs() < 1e-8, "{b:?}");
    }

    #[test]
    fn duplicate_column_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20;
        let x: Vec<f64> = (0..n)
            .flat_map(|_| {
                let v: f64 = rng.random();
                [1.0, v, v]
            })
            .collect();
        let y: Vec<f64> = (0..n).map(|i| i as f64).collect();
        assert_eq!(ols_solve(&x, n, 3, &y), Err(vec![2]));
    }

    #[test]
    fn zero_column_is_reported() {
        let x = vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        assert_eq!(ols_solve(&x, 3, 2, &[1.0, 2.0, 3.0]), Err(vec![1]));
    }

    #[test]
    fn single_precision_line() {
        let x: Vec<f32> = (0..8).flat_map(|i| [1.0, i as f32]).collect();
        let y: Vec<f32> = (0..8).map(|i| 3.0 - 0.5 * i as f32).collect();
        let b = ols_solve(&x, 8, 2, &y).unwrap();
        assert!((b[0] - 3.0).abs() < 1e-4 && (b[1] + 0.5).abs() < 1e-5);
    }
}
