//! CSV and JSON serialisation of experiment reports.

use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use toral_core::report::{ExperimentReport, Value};

use crate::config::Format;
use crate::error::{LabError, Result};

/// Seventeen significant digits, enough to round-trip every f64.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Pretty JSON whose floats carry seventeen significant digits.
struct FullPrecision<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_real(value).as_bytes())
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

pub fn to_json(report: &ExperimentReport) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
    report.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn from_json(text: &str) -> Result<ExperimentReport> {
    Ok(serde_json::from_str(text)?)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Real(x) => format_real(*x),
        Value::Text(s) => s.clone(),
    }
}

/// The per-sample table: a header naming every column, then one line per row.
pub fn to_csv(report: &ExperimentReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&report.columns)?;
    for row in &report.per_sample {
        w.write_record(row.iter().map(cell))?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
}

/// Parses a table written by [`to_csv`]; integers and reals are recovered
/// by their textual form.
pub fn rows_from_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<Value>>)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let columns = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(parse_cell).collect());
    }
    Ok((columns, rows))
}

fn parse_cell(s: &str) -> Value {
    if let Ok(i) = s.parse::<i64>() {
        Value::Int(i)
    } else if let Ok(x) = s.parse::<f64>() {
        Value::Real(x)
    } else {
        Value::Text(s.into())
    }
}

/// Companion path for the CSV metadata: `out.csv` becomes `out.csv.meta.json`.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes the report. CSV output carries the table; config, seeds and
/// summary go to a JSON companion file next to it.
pub fn emit_report(report: &ExperimentReport, format: Format, path: &Path) -> Result<()> {
    let write = |p: &Path, text: String| std::fs::write(p, text).map_err(|source| LabError::Io { path: p.into(), source });
    match format {
        Format::Json => write(path, to_json(report)?),
        Format::Csv => {
            write(path, to_csv(report)?)?;
            let meta = ExperimentReport { per_sample: Vec::new(), ..report.clone() };
            write(&meta_path(path), to_json(&meta)?)
        }
    }
}
