//! Plain-text instance files.
//!
//! ```text
//! dysplit-instance 1
//! # free-form comment lines
//! matrix A <rows> <cols>
//! <one line of whitespace-separated values per row>
//! vector b <len>
//! <values on one line>
//! observations omega <rows> <cols> <count>
//! <row> <col> <value>        (one line per entry)
//! scalar lambda <value>
//! end
//! ```
//!
//! Floats are written in shortest round-trip form, so reading back is exact.

use std::io::{BufRead, Write};

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, ObservationSet};

const MAGIC: &str = "dysplit-instance";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceItem {
    Matrix(DenseMatrix),
    Vector(Array1<f64>),
    Observations(ObservationSet),
    Scalar(f64),
}

/// Ordered collection of named items.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InstanceFile {
    pub comments: Vec<String>,
    pub items: Vec<(String, InstanceItem)>,
}

impl InstanceFile {
    pub fn push(&mut self, name: impl Into<String>, item: InstanceItem) -> &mut Self {
        self.items.push((name.into(), item));
        self
    }

    pub fn get(&self, name: &str) -> Option<&InstanceItem> {
        self.items.iter().find(|(n, _)| n == name).map(|(_, i)| i)
    }

    pub fn matrix(&self, name: &str) -> Option<&DenseMatrix> {
        match self.get(name) {
            Some(InstanceItem::Matrix(m)) => Some(m),
            _ => None,
        }
    }

    pub fn vector(&self, name: &str) -> Option<&Array1<f64>> {
        match self.get(name) {
            Some(InstanceItem::Vector(v)) => Some(v),
            _ => None,
        }
    }

    pub fn observations(&self, name: &str) -> Option<&ObservationSet> {
        match self.get(name) {
            Some(InstanceItem::Observations(o)) => Some(o),
            _ => None,
        }
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        match self.get(name) {
            Some(InstanceItem::Scalar(s)) => Some(*s),
            _ => None,
        }
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{MAGIC} {VERSION}")?;
        for c in &self.comments {
            writeln!(out, "# {c}")?;
        }
        for (name, item) in &self.items {
            match item {
                InstanceItem::Matrix(m) => {
                    writeln!(out, "matrix {name} {} {}", m.rows(), m.cols())?;
                    for row in m.as_array().rows() {
                        write_values(&mut out, row.iter())?;
                    }
                }
                InstanceItem::Vector(v) => {
                    writeln!(out, "vector {name} {}", v.len())?;
                    write_values(&mut out, v.iter())?;
                }
                InstanceItem::Observations(o) => {
                    let (r, c) = o.shape();
                    writeln!(out, "observations {name} {r} {c} {}", o.len())?;
                    for ((i, j), v) in o.iter() {
                        writeln!(out, "{i} {j} {v}")?;
                    }
                }
                InstanceItem::Scalar(s) => writeln!(out, "scalar {name} {s}")?,
            }
        }
        writeln!(out, "end")
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate().map(|(k, l)| (k + 1, l));
        let mut next_line = || -> Result<Option<(usize, String)>> {
            match lines.next() {
                None => Ok(None),
                Some((k, Ok(l))) => Ok(Some((k, l))),
                Some((k, Err(e))) => Err(Error::Parse { line: k, message: e.to_string() }),
            }
        };
        let (k, header) = next_line()?.ok_or(Error::Parse { line: 1, message: "empty input".into() })?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(MAGIC) {
            return Err(Error::Parse { line: k, message: format!("expected `{MAGIC}` header") });
        }
        let version: u32 = parse(parts.next(), k)?;
        if version != VERSION {
            return Err(Error::Parse { line: k, message: format!("unsupported version {version}") });
        }
        let mut file = InstanceFile::default();
        loop {
            let Some((k, line)) = next_line()? else {
                return Err(Error::Parse { line: k, message: "missing `end`".into() });
            };
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(c) = trimmed.strip_prefix('#') {
                file.comments.push(c.trim().to_string());
                continue;
            }
            let mut tok = trimmed.split_whitespace();
            let kind = tok.next().unwrap_or_default();
            if kind == "end" {
                return Ok(file);
            }
            let name = tok
                .next()
                .ok_or(Error::Parse { line: k, message: "missing item name".into() })?
                .to_string();
            let item = match kind {
                "matrix" => {
                    let rows: usize = parse(tok.next(), k)?;
                    let cols: usize = parse(tok.next(), k)?;
                    let mut data = Vec::with_capacity(rows * cols);
                    for _ in 0..rows {
                        let (k, row) = next_line()?.ok_or(Error::Parse { line: k, message: "truncated matrix".into() })?;
                        let vals = parse_values(&row, k)?;
                        if vals.len() != cols {
                            return Err(Error::Parse { line: k, message: format!("expected {cols} values, found {}", vals.len()) });
                        }
                        data.extend(vals);
                    }
                    let arr = Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Parse { line: k, message: e.to_string() })?;
                    InstanceItem::Matrix(DenseMatrix::from_array(arr)?)
                }
                "vector" => {
                    let len: usize = parse(tok.next(), k)?;
                    let (k, row) = next_line()?.ok_or(Error::Parse { line: k, message: "truncated vector".into() })?;
                    let vals = parse_values(&row, k)?;
                    if vals.len() != len {
                        return Err(Error::Parse { line: k, message: format!("expected {len} values, found {}", vals.len()) });
                    }
                    InstanceItem::Vector(Array1::from_vec(vals))
                }
                "observations" => {
                    let rows: usize = parse(tok.next(), k)?;
                    let cols: usize = parse(tok.next(), k)?;
                    let count: usize = parse(tok.next(), k)?;
                    let mut idx = Vec::with_capacity(count);
                    let mut vals = Vec::with_capacity(count);
                    for _ in 0..count {
                        let (k, row) = next_line()?.ok_or(Error::Parse { line: k, message: "truncated observations".into() })?;
                        let mut t = row.split_whitespace();
                        let i: usize = parse(t.next(), k)?;
                        let j: usize = parse(t.next(), k)?;
                        let v: f64 = parse(t.next(), k)?;
                        idx.push((i, j));
                        vals.push(v);
                    }
                    InstanceItem::Observations(ObservationSet::new((rows, cols), idx, vals)?)
                }
                "scalar" => InstanceItem::Scalar(parse(tok.next(), k)?),
                other => return Err(Error::Parse { line: k, message: format!("unknown item kind `{other}`") }),
            };
            file.items.push((name, item));
        }
    }
}

fn write_values<'a, W: Write>(out: &mut W, values: impl Iterator<Item = &'a f64>) -> std::io::Result<()> {
    let mut first = true;
    for v in values {
        if !first {
            out.write_all(b" ")?;
        }
        write!(out, "{v}")?;
        first = false;
    }
    out.write_all(b"\n")
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let tok = tok.ok_or(Error::Parse { line, message: "missing field".into() })?;
    tok.parse().map_err(|e: T::Err| Error::Parse { line, message: format!("`{tok}`: {e}") })
}

fn parse_values(line: &str, k: usize) -> Result<Vec<f64>> {
    line.split_whitespace().map(|t| parse(Some(t), k)).collect()
}
