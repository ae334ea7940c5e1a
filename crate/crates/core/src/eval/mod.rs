//! Rolling-origin backtest and forecast accuracy scores.

mod backtest;
mod deploy;
pub mod metrics;
mod origins;

pub use backtest::{
    aggregate, derive_seed, forecast_at_origin, run_backtest, select_specs, BacktestPlan,
    BacktestReport, FitFailure, HorizonScore, Metric, ModelId, OverallScore, SelectedSpecs,
};
pub use deploy::{fit_models, forecast_models, FittedSet};
pub use metrics::{crps, percentile_score, pinball, point_scores, winkler, PointScores, ScoreRecord};
pub use origins::{horizon_counts, rolling_origins, Origin};
