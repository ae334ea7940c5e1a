//! Random-walk (last value) forecaster.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FittedModel, ForecastDistribution, Innovation, ModelParams, Sampler, TrainingMeta, Transform};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::DailySeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NaiveParams<T> {
    pub last: T,
}

/// Residual sd is the root mean square of one-step differences.
pub fn fit_naive<T: Scalar>(y: &DailySeries<T>) -> Result<FittedModel<T>> {
    let v = y.values();
    if v.len() < 2 {
        return Err(Error::Data(format!(
            "naive fit needs at least 2 observations, got {}",
            v.len()
        )));
    }
    let diffs: Vec<T> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let ms = diffs.iter().map(|&d| d * d).sum::<T>() / T::of(diffs.len());
    Ok(FittedModel {
        params: ModelParams::Naive(NaiveParams {
            last: v[v.len() - 1],
        }),
        residual_sd: ms.sqrt(),
        residuals: diffs,
        training_meta: TrainingMeta {
            n_obs: v.len(),
            end_date: y.end(),
            transform: Transform::None,
            aic: None,
            aicc: None,
        },
    })
}

pub(super) fn forecast<T: Scalar>(
    model: &FittedModel<T>,
    p: &NaiveParams<T>,
    horizon: usize,
    paths: usize,
    seed: u64,
    innovation: Innovation,
) -> ForecastDistribution<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = Sampler::new(innovation, model.residual_sd, &model.residuals);
    let sims = (0..paths)
        .map(|_| {
            let mut level = p.last;
            (0..horizon)
                .map(|_| {
                    level = level + sampler.draw(&mut rng);
                    level.max(T::zero())
                })
                .collect()
        })
        .collect();
    ForecastDistribution::from_paths(model.training_meta.end_date, sims)
        .expect("naive paths are finite and clamped")
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn series(v: &[f64]) -> DailySeries<f64> {
        DailySeries::new("y", NaiveDate::from_ymd_opt(2020, 3, 18).unwrap(), v.to_vec()).unwrap()
    }

    fn sd(xs: &[f64]) -> f64 {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    }

    #[test]
    fn stores_last_value() {
        let m = fit_naive(&series(&[5.0, 9.0, 42.0])).unwrap();
        assert_eq!(m.point_forecast(3).unwrap(), vec![42.0; 3]);
    }

    #[test]
    fn residual_sd_examples() {
        assert_eq!(fit_naive(&series(&[3.0; 6])).unwrap().residual_sd, 0.0);
        let m = fit_naive(&series(&[1.0, 2.0])).unwrap();
        assert_eq!(m.residual_sd, 1.0);
        assert!(fit_naive(&series(&[1.0])).is_err());
    }

    #[test]
    fn zero_noise_paths_are_constant() {
        let m = fit_naive(&series(&[42.0, 42.0, 42.0])).unwrap();
        let f = m.forecast(5, 20, 1, Innovation::Gaussian).unwrap();
        assert!(f.paths().iter().flatten().all(|&v| v == 42.0));
    }

    #[test]
    fn spread_grows_with_square_root_of_horizon() {
        // far from zero so clamping never binds
        let m = fit_naive(&series(&[1000.0, 1003.0, 1000.0, 1003.0, 1000.0])).unwrap();
        let s = m.residual_sd;
        let f = m.forecast(4, 10_000, 7, Innovation::Gaussian).unwrap();
        let at = |h: usize| sd(&f.paths().iter().map(|p| p[h - 1]).collect::<Vec<_>>());
        assert!((at(1) / s - 1.0).abs() < 0.05, "{}", at(1) / s);
        assert!((at(4) / (2.0 * s) - 1.0).abs() < 0.05, "{}", at(4) / s);
    }

    #[test]
    fn bootstrap_draws_observed_differences() {
        let m = fit_naive(&series(&[100.0, 101.0, 100.0, 101.0])).unwrap();
        let f = m.forecast(1, 200, 3, Innovation::Bootstrap).unwrap();
        assert!(f.paths().iter().all(|p| p[0] == 100.0 || p[0] == 102.0));
    }
}
