use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSpec;
use crate::models::FittedModel;
use crate::scalar::Scalar;

/// Version written into every saved document.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a, V> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a V,
}

#[derive(Serialize, Deserialize)]
struct ModelBody<T> {
    model: T,
}

#[derive(Serialize, Deserialize)]
struct SpecBody {
    spec: FeatureSpec,
}

fn to_json<V: Serialize>(body: &V) -> Result<String> {
    let doc = Envelope {
        schema_version: SCHEMA_VERSION,
        body,
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn from_json<V: DeserializeOwned>(text: &str) -> Result<V> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let found = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Parse("missing schema_version".into()))?;
    if found != u64::from(SCHEMA_VERSION) {
        return Err(Error::Version {
            found: u32::try_from(found).unwrap_or(u32::MAX),
            expected: SCHEMA_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))
}

/// Serialize a fitted model with its schema version.
pub fn model_to_json<T: Scalar>(model: &FittedModel<T>) -> Result<String> {
    to_json(&ModelBody { model })
}

pub fn model_from_json<T: Scalar>(text: &str) -> Result<FittedModel<T>> {
    from_json::<ModelBody<FittedModel<T>>>(text).map(|b| b.model)
}

pub fn save_model<T: Scalar>(path: impl AsRef<Path>, model: &FittedModel<T>) -> Result<()> {
    fs::write(path, model_to_json(model)?)?;
    Ok(())
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<FittedModel<T>> {
    model_from_json(&fs::read_to_string(path)?)
}

pub fn save_spec(path: impl AsRef<Path>, spec: &FeatureSpec) -> Result<()> {
    fs::write(path, to_json(&SpecBody { spec: spec.clone() })?)?;
    Ok(())
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<FeatureSpec> {
    let spec = from_json::<SpecBody>(&fs::read_to_string(path)?)?.spec;
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exante::fit_mlr;
    use crate::features::Term;
    use crate::models::{fit_ets_auto, EtsConfig};
    use crate::series::DailySeries;
    use chrono::NaiveDate;

    fn data() -> (DailySeries<f64>, DailySeries<f64>) {
        let d0 = NaiveDate::from_ymd_opt(2020, 3, 18).unwrap();
        let calls: Vec<f64> = (0..80).map(|t| 200.0 + 30.0 * (t as f64 / 5.0).sin()).collect();
        let cases: Vec<f64> = (0..80)
            .map(|t| (10.0 + 0.1 * t as f64 + 0.05 * calls[t.max(7) - 7] + (t % 3) as f64).round())
            .collect();
        (
            DailySeries::new("cases", d0, cases).unwrap(),
            DailySeries::new("calls", d0, calls).unwrap(),
        )
    }

    #[test]
    fn mlr_round_trip_is_bit_exact() {
        let (cases, calls) = data();
        let spec = FeatureSpec::from_terms([Term::Intercept, Term::Trend, Term::CallsLag(7)]).unwrap();
        let m = fit_mlr(&cases, &calls, &spec).unwrap();
        let back: FittedModel<f64> = model_from_json(&model_to_json(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn ets_round_trip() {
        let (cases, _) = data();
        let m = fit_ets_auto(&cases, &EtsConfig::default()).unwrap();
        let back: FittedModel<f64> = model_from_json(&model_to_json(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn wrong_version_and_truncation() {
        let (cases, calls) = data();
        let m = fit_mlr(&cases, &calls, &FeatureSpec::intercept_only()).unwrap();
        let text = model_to_json(&m).unwrap();
        let old = text.replacen("\"schema_version\": 1", "\"schema_version\": 0", 1);
        assert!(matches!(
            model_from_json::<f64>(&old),
            Err(Error::Version { found: 0, expected: 1 })
        ));
        let cut = &text[..text.len() / 2];
        assert!(matches!(model_from_json::<f64>(cut), Err(Error::Parse(_))));
    }

    #[test]
    fn spec_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spec.json");
        let spec = FeatureSpec::from_terms([Term::Intercept, Term::Weekend, Term::CasesLag(1)]).unwrap();
        save_spec(&path, &spec).unwrap();
        assert_eq!(load_spec(&path).unwrap(), spec);
    }
}
