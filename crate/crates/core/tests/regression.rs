mod common;

use callcast::exante::{fit_mlr, stepwise_select, PredictorPlan, StepwiseConfig};
use callcast::features::{build_design, FeatureSpec, Term};
use callcast::models::{fit_ols, ols_solve, ModelParams};
use callcast::series::DailySeries;
use callcast::Scalar;
use common::{start, Synthetic};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pair(cases: Vec<f64>, calls: Vec<f64>) -> (DailySeries<f64>, DailySeries<f64>) {
    (
        DailySeries::new("cases", start(), cases).unwrap(),
        DailySeries::new("calls", start(), calls).unwrap(),
    )
}

fn random_walk(rng: &mut ChaCha8Rng, n: usize, level: f64, sd: f64) -> Vec<f64> {
    let mut x = level;
    (0..n)
        .map(|_| {
            x = (x + sd * f64::standard_normal(rng)).max(0.0);
            x.round()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residuals_orthogonal_to_columns(seed in any::<u64>(), n in 8usize..60, k in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n * k).map(|_| f64::standard_normal(&mut rng)).collect();
        let y: Vec<f64> = (0..n).map(|_| f64::standard_normal(&mut rng)).collect();
        let b = ols_solve(&x, n, k, &y).unwrap();
        for j in 0..k {
            let dot: f64 = (0..n)
                .map(|i| {
                    let fit: f64 = (0..k).map(|c| x[i * k + c] * b[c]).sum();
                    x[i * k + j] * (y[i] - fit)
                })
                .sum();
            prop_assert!(dot.abs() < 1e-8, "column {} residual dot {}", j, dot);
        }
    }
}

#[test]
fn duplicated_column_reported() {
    let x: Vec<f64> = (0..10).flat_map(|i| [1.0, i as f64, 2.0 * i as f64]).collect();
    let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
    assert_eq!(ols_solve(&x, 10, 3, &y), Err(vec![2]));
}

#[test]
fn recovers_lag_seven_call_effect() {
    let (cases, calls) = Synthetic {
        n: 400,
        noise_phi: 0.0,
        noise_sd: 0.02,
        calls_sd: 20.0,
        ..Synthetic::default()
    }
    .generate(11);
    let spec = FeatureSpec::from_terms([Term::Intercept, Term::Trend, Term::Weekend, Term::CallsLag(7)]).unwrap();
    let model = fit_mlr(&cases, &calls, &spec).unwrap();
    let ModelParams::Mlr(p) = &model.params else {
        panic!("expected a regression");
    };
    let coef = |t: Term| p.coefficients[p.terms.iter().position(|&x| x == t).unwrap()];
    assert!((coef(Term::CallsLag(7)) - 0.003).abs() < 3e-4, "{}", coef(Term::CallsLag(7)));
    assert!((coef(Term::Trend) - 0.004).abs() < 1e-3, "{}", coef(Term::Trend));
    assert!((coef(Term::Weekend) + 0.3).abs() < 0.05, "{}", coef(Term::Weekend));
}

#[test]
fn design_rows_start_after_longest_lag() {
    let (cases, calls) = Synthetic::default().generate(0);
    let spec = FeatureSpec::from_terms([Term::Intercept, Term::CasesLag(2), Term::CallsLag(7)]).unwrap();
    let d = build_design(&cases, &calls, &spec).unwrap();
    assert_eq!(d.first_index(), 7);
    assert_eq!(d.n_rows(), cases.len() - 7);
    let fitted = fit_ols(&d).unwrap();
    assert_eq!(fitted.residuals.len(), d.n_rows());
}

#[test]
fn pure_noise_stops_near_intercept() {
    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let n = 200;
        let cases: Vec<f64> = (0..n)
            .map(|_| ((3.0 + 0.2 * f64::standard_normal(&mut rng)).exp() - 1.0).round())
            .collect();
        let calls = random_walk(&mut rng, n, 300.0, 10.0);
        let (cases, calls) = pair(cases, calls);
        let cfg = StepwiseConfig {
            seed,
            ..StepwiseConfig::default()
        };
        let result = stepwise_select(&cases, &calls, &PredictorPlan::default(), &cfg).unwrap();
        let spurious = result.selected.terms().len() - 1;
        assert!(result.selected.include_intercept);
        assert!(spurious <= 1, "seed {seed} selected {}", result.selected);
    }
}

#[test]
fn strong_call_signal_is_selected() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 300;
    let calls = random_walk(&mut rng, n + 7, 500.0, 25.0);
    let cases: Vec<f64> = (0..n)
        .map(|t| {
            let log = 1.0 + 0.006 * calls[t] + 0.05 * f64::standard_normal(&mut rng);
            (log.exp() - 1.0).round()
        })
        .collect();
    let (cases, calls) = pair(cases, calls[7..].to_vec());
    let result = stepwise_select(&cases, &calls, &PredictorPlan::default(), &StepwiseConfig::default()).unwrap();
    assert!(result.selected.contains(Term::CallsLag(7)), "selected {}", result.selected);
    assert_eq!(result.trace.first().map(|s| s.term), Some(Term::CallsLag(7)));
    assert!(result.trace.windows(2).all(|w| w[1].rmse <= w[0].rmse));
}
