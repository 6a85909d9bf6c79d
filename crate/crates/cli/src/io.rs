//! CSV input and output.
//!
//! Reals are written with 17 significant digits so that outputs compare
//! byte for byte across runs.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::error::CliError;

pub fn real(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x == 0.0 {
        // Keeps -0 and 0 from printing differently.
        "0.0000000000000000e0".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn optional(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let io = |e: csv::Error| CliError::Io {
            path: path.to_path_buf(),
            source: e.into(),
        };
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush().map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a headed CSV, checking the header and handing each record with its
/// line number to `parse`.
fn read_records<T>(
    path: &Path,
    expected: &[&str],
    mut parse: impl FnMut(&csv::StringRecord) -> Result<T, String>,
) -> Result<Vec<T>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::data(path, e.to_string()))?;
    let header = reader
        .headers()
        .map_err(|e| CliError::data(path, e.to_string()))?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    if names != expected {
        return Err(CliError::data(
            path,
            format!("line 1: expected columns {}, found {}", expected.join(","), names.join(",")),
        ));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::data(path, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        out.push(parse(&record).map_err(|m| CliError::data(path, format!("line {line}: {m}")))?);
    }
    if out.is_empty() {
        return Err(CliError::data(path, "no data rows"));
    }
    Ok(out)
}

fn date(field: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(field, "%Y-%m-%d").map_err(|e| format!("bad date `{field}`: {e}"))
}

fn count(field: &str, name: &str) -> Result<u64, String> {
    field
        .parse()
        .map_err(|_| format!("{name} must be a non-negative integer, got `{field}`"))
}

fn number(field: &str, name: &str) -> Result<f64, String> {
    field
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("{name} must be a finite number, got `{field}`"))
}

/// Consecutive days starting at `first`.
fn check_consecutive(path: &Path, dates: &[NaiveDate]) -> Result<(), CliError> {
    for (i, pair) in dates.windows(2).enumerate() {
        if pair[1] != pair[0] + chrono::Duration::days(1) {
            return Err(CliError::data(
                path,
                format!("line {}: dates must be consecutive days", i + 3),
            ));
        }
    }
    Ok(())
}

pub struct CaseSeries {
    pub dates: Vec<NaiveDate>,
    pub cases: Vec<u64>,
}

pub fn read_cases(path: &Path) -> Result<CaseSeries, CliError> {
    let rows = read_records(path, &["date", "cases"], |r| Ok((date(&r[0])?, count(&r[1], "cases")?)))?;
    let (dates, cases): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    check_consecutive(path, &dates)?;
    Ok(CaseSeries { dates, cases })
}

pub fn read_serial_interval(path: &Path) -> Result<Vec<f64>, CliError> {
    let rows = read_records(path, &["lag", "weight"], |r| {
        Ok((count(&r[0], "lag")?, number(&r[1], "weight")?))
    })?;
    for (i, (lag, _)) in rows.iter().enumerate() {
        if *lag != i as u64 + 1 {
            return Err(CliError::data(path, format!("line {}: lags must run 1, 2, 3, …", i + 2)));
        }
    }
    Ok(rows.into_iter().map(|(_, w)| w).collect())
}

pub struct WastewaterRows {
    pub dates: Vec<NaiveDate>,
    pub concentrations: Vec<Option<f64>>,
    pub coverage: Vec<u64>,
}

/// `date,concentration,catchment_population`; an empty concentration marks
/// an unsampled day.
pub fn read_wastewater(path: &Path) -> Result<WastewaterRows, CliError> {
    let rows = read_records(path, &["date", "concentration", "catchment_population"], |r| {
        let c = if r[1].is_empty() {
            None
        } else {
            Some(number(&r[1], "concentration")?)
        };
        Ok((date(&r[0])?, c, count(&r[2], "catchment_population")?))
    })?;
    let mut out = WastewaterRows {
        dates: Vec::new(),
        concentrations: Vec::new(),
        coverage: Vec::new(),
    };
    for (d, c, n) in rows {
        out.dates.push(d);
        out.concentrations.push(c);
        out.coverage.push(n);
    }
    check_consecutive(path, &out.dates)?;
    Ok(out)
}

pub fn output_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
