use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::DailySeries;

/// Aligned cases and calls read from one file.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub cases: DailySeries<T>,
    pub calls: DailySeries<T>,
    pub source: PathBuf,
    pub rows: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Read a `date,cases,calls` file with ISO dates.
pub fn parse_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_dataset(file, path)
}

/// As [`parse_csv`] from any reader. Rows may come in any order; they are
/// sorted by date and must then form a contiguous calendar. Row numbers in
/// errors count data rows from 1.
pub fn read_dataset<T: Scalar, R: Read>(reader: R, source: impl Into<PathBuf>) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_ascii_lowercase)
        .collect();
    if header != ["date", "cases", "calls"] {
        return Err(Error::Parse(format!(
            "expected header 'date,cases,calls', found '{}'",
            header.join(",")
        )));
    }
    let mut rows: Vec<(NaiveDate, T, T)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(csv_error)?;
        if rec.len() != 3 {
            return Err(Error::Value {
                row,
                message: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|e| Error::Value {
            row,
            message: format!("bad date '{}': {e}", &rec[0]),
        })?;
        let value = |field: &str, name: &str| -> Result<T> {
            let v: f64 = field.parse().map_err(|_| Error::Value {
                row,
                message: format!("{name} '{field}' is not a number"),
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Value {
                    row,
                    message: format!("{name} must be finite and nonnegative, got {field}"),
                });
            }
            Ok(T::lit(v))
        };
        rows.push((date, value(&rec[1], "cases")?, value(&rec[2], "calls")?));
    }
    if rows.is_empty() {
        return Err(Error::Data("input has no data rows".into()));
    }
    rows.sort_by_key(|r| r.0);
    for w in rows.windows(2) {
        let expected = w[0].0 + Days::new(1);
        if w[1].0 == w[0].0 {
            return Err(Error::Duplicate(w[0].0));
        }
        if w[1].0 != expected {
            return Err(Error::Gap(expected));
        }
    }
    let start = rows[0].0;
    let n = rows.len();
    let (cases, calls) = rows.into_iter().map(|(_, a, b)| (a, b)).unzip();
    Ok(Dataset {
        cases: DailySeries::new("cases", start, cases)?,
        calls: DailySeries::new("calls", start, calls)?,
        source: source.into(),
        rows: n,
    })
}

/// Write the canonical form: header, ascending dates, shortest numbers.
pub fn write_dataset<T: Scalar, W: Write>(data: &Dataset<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "cases", "calls"]).map_err(csv_error)?;
    for (i, (a, b)) in data.cases.values().iter().zip(data.calls.values()).enumerate() {
        w.write_record([
            data.cases.date_at(i).format("%Y-%m-%d").to_string(),
            a.to_string(),
            b.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
