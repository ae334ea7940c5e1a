//! Probabilistic forecasting of daily case counts from lagged call volumes.
//!
//! The crate is generic over the floating point type through [`Scalar`];
//! the aliases at the root fix it to `f64`, which is what the command line
//! tool uses.

// `!(a < b)` is used on purpose so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod exante;
pub mod features;
pub mod io;
pub mod models;
pub mod optim;
pub mod scalar;
pub mod series;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Series = series::DailySeries<f64>;
pub type Design = features::DesignMatrix<f64>;
pub type Model = models::FittedModel<f64>;
pub type Forecast = models::ForecastDistribution<f64>;
pub type Report = eval::BacktestReport<f64>;
