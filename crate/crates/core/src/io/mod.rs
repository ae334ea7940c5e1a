//! File formats: the input CSV, run configuration, saved models and
//! report tables and charts.

pub mod config;
mod dataset;
mod persist;
mod report;
pub mod svg;

pub use config::{RunConfig, SearchKind, OUTPUT_DIR_ENV};
pub use dataset::{parse_csv, read_dataset, write_dataset, Dataset};
pub use persist::{
    load_model, load_spec, model_from_json, model_to_json, save_model, save_spec, SCHEMA_VERSION,
};
pub use report::{
    emit_report, fan_for, forecast_csv, overall_csv, per_horizon_csv, records_csv, write_output,
};
