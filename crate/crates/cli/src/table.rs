//! Schema-stable result tables with CSV and JSON renderings.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde_json::{json, Map, Value};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Empty,
    Int(u64),
    Float(f64),
    Text(String),
}

impl Cell {
    pub fn opt_float(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::Float)
    }

    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Float(v) => Some(*v),
            _ => None,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Empty => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(v) => json!(v.to_string()),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Shortest round-trip text; scientific notation outside `[1e-4, 1e15)`.
pub fn fmt_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Empty => Ok(()),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => f.write_str(&fmt_float(*v)),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    /// Table kind, e.g. `matcomp`; fixes the column set.
    pub schema: &'static str,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(schema: &'static str, columns: &'static [&'static str]) -> Self {
        Self { schema, columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for schema {}", self.schema);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn header_line(&self) -> String {
        format!("# dysplit {} v{SCHEMA_VERSION}", self.schema)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.header_line()).map_err(|e| CliError::Output(e.to_string()))?;
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| CliError::Output(e.to_string());
        w.write_record(self.columns).map_err(err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string())).map_err(err)?;
        }
        w.flush().map_err(|e| CliError::Output(e.to_string()))
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> =
                    self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.to_json())).collect();
                Value::Object(obj)
            })
            .collect();
        json!({
            "schema": self.schema,
            "version": SCHEMA_VERSION,
            "columns": self.columns,
            "rows": rows,
        })
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => {
                let mut buf = Vec::new();
                self.write_csv(&mut buf)?;
                String::from_utf8(buf).map_err(|e| CliError::Output(e.to_string()))
            }
            Format::Json => serde_json::to_string_pretty(&self.to_json())
                .map(|s| s + "\n")
                .map_err(|e| CliError::Output(e.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.0, 0.3, 1.5e-6, 1.2345678901234567e-5, 12.0, 3e20, -7.25e-9] {
            assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_float(0.3), "0.3");
        assert_eq!(fmt_float(1.5e-6), "1.5e-6");
    }

    #[test]
    fn csv_has_version_line_and_fixed_columns() {
        let mut t = ResultTable::new("demo", &["a", "b", "c"]);
        t.push(vec![Cell::text("x"), Cell::Int(3), Cell::Empty]);
        t.push(vec![Cell::text("y"), Cell::Float(0.5), Cell::Float(2e-7)]);
        let s = t.render(Format::Csv).unwrap();
        assert_eq!(s, "# dysplit demo v1\na,b,c\nx,3,\ny,0.5,2e-7\n");
        let j = t.to_json();
        assert_eq!(j["rows"][0]["c"], Value::Null);
        assert_eq!(j["version"], 1);
    }
}
