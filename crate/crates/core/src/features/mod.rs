//! Correlation diagnostics and regressor construction.

mod design;
mod diagnostics;

pub use design::{
    build_design, DesignMatrix, FeatureSpec, Term, MAX_CALLS_LAG, MAX_CASES_LAG, MIN_CALLS_LAG,
};
pub(crate) use design::{regressor_row, RegressorSource};
pub use diagnostics::{
    acf, ccf, ccf_values, pacf, pacf_from_acf, white_noise_band, write_correlogram_csv,
};
