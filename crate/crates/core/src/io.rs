//! Matrix files: a small JSON format and Matrix Market import.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::Field;
use crate::error::{Error, Result};
use crate::matrix::{c, imag_norm, CMat};

/// `{"rows", "cols", "field", "data"}` with row-major data given as plain
/// numbers or `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixData {
    pub rows: usize,
    pub cols: usize,
    pub field: Field,
    pub data: Vec<Entry>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl MatrixData {
    /// Real field is used whenever the matrix has no imaginary part.
    pub fn from_cmat(m: &CMat) -> Self {
        let field = if imag_norm(m) == 0.0 { Field::Real } else { Field::Complex };
        Self::with_field(m, field)
    }

    pub fn with_field(m: &CMat, field: Field) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push(match field {
                    Field::Real => Entry::Real(z.re),
                    Field::Complex => Entry::Complex([z.re, z.im]),
                });
            }
        }
        MatrixData { rows: m.nrows(), cols: m.ncols(), field, data }
    }

    pub fn to_cmat(&self) -> Result<CMat> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Format(format!(
                "matrix declares {}x{} but has {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        let mut m = CMat::zeros(self.rows, self.cols);
        for (k, e) in self.data.iter().enumerate() {
            let z = match *e {
                Entry::Real(x) => c(x, 0.0),
                Entry::Complex([re, im]) => c(re, im),
            };
            if !z.is_finite() {
                return Err(Error::Format(format!("entry {k} is not finite")));
            }
            if self.field == Field::Real && z.im != 0.0 {
                return Err(Error::Format(format!("entry {k} is complex in a real matrix")));
            }
            m[(k / self.cols, k % self.cols)] = z;
        }
        Ok(m)
    }
}

/// Reads JSON or Matrix Market, chosen by the `%%MatrixMarket` banner.
pub fn read_matrix(path: &Path) -> Result<CMat> {
    let text = fs::read_to_string(path)?;
    parse_matrix(&text)
}

pub fn parse_matrix(text: &str) -> Result<CMat> {
    if text.trim_start().starts_with("%%MatrixMarket") {
        return parse_matrix_market(text);
    }
    let md: MatrixData = serde_json::from_str(text)?;
    md.to_cmat()
}

pub fn parse_matrix_market(text: &str) -> Result<CMat> {
    let mut lines = text.lines();
    let banner = lines.next().ok_or_else(|| Error::Format("empty Matrix Market file".into()))?;
    let tok: Vec<String> = banner.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if tok.len() < 5 || tok[1] != "matrix" {
        return Err(Error::Format(format!("bad Matrix Market banner: {banner}")));
    }
    let (layout, kind, sym) = (tok[2].as_str(), tok[3].as_str(), tok[4].as_str());
    let complex = match kind {
        "real" | "integer" | "double" => false,
        "complex" => true,
        other => return Err(Error::Format(format!("unsupported Matrix Market field {other}"))),
    };
    let mut body = lines.map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('%'));
    let size_line = body.next().ok_or_else(|| Error::Format("missing size line".into()))?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| Error::Format(format!("bad size line: {size_line}"))))
        .collect::<Result<_>>()?;
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::Format(format!("bad number {s}"))) };
    let (rows, cols) = (sizes.first().copied().unwrap_or(0), sizes.get(1).copied().unwrap_or(0));
    let mut m = CMat::zeros(rows, cols);
    let put = |i: usize, j: usize, re: f64, im: f64, m: &mut CMat| -> Result<()> {
        if i >= rows || j >= cols {
            return Err(Error::Format(format!("entry ({}, {}) out of range", i + 1, j + 1)));
        }
        m[(i, j)] = c(re, im);
        if i != j {
            match sym {
                "symmetric" => m[(j, i)] = c(re, im),
                "skew-symmetric" => m[(j, i)] = c(-re, -im),
                "hermitian" => m[(j, i)] = c(re, -im),
                _ => {}
            }
        }
        Ok(())
    };
    match layout {
        "array" => {
            // column-major, lower triangle only for symmetric variants
            let mut idx = Vec::new();
            for j in 0..cols {
                let start = match sym {
                    "general" => 0,
                    "skew-symmetric" => j + 1,
                    _ => j,
                };
                for i in start..rows {
                    idx.push((i, j));
                }
            }
            for (k, line) in body.enumerate() {
                let &(i, j) = idx.get(k).ok_or_else(|| Error::Format("too many array entries".into()))?;
                let t: Vec<&str> = line.split_whitespace().collect();
                let re = num(t.first().copied().unwrap_or(""))?;
                let im = if complex { num(t.get(1).copied().unwrap_or(""))? } else { 0.0 };
                put(i, j, re, im, &mut m)?;
            }
        }
        "coordinate" => {
            for line in body {
                let t: Vec<&str> = line.split_whitespace().collect();
                if t.len() < 3 {
                    return Err(Error::Format(format!("bad coordinate entry: {line}")));
                }
                let i: usize = t[0].parse().map_err(|_| Error::Format(format!("bad index in {line}")))?;
                let j: usize = t[1].parse().map_err(|_| Error::Format(format!("bad index in {line}")))?;
                if i == 0 || j == 0 {
                    return Err(Error::Format("Matrix Market indices are 1-based".into()));
                }
                let re = num(t[2])?;
                let im = if complex { num(t.get(3).copied().unwrap_or(""))? } else { 0.0 };
                put(i - 1, j - 1, re, im, &mut m)?;
            }
        }
        other => return Err(Error::Format(format!("unsupported Matrix Market layout {other}"))),
    }
    Ok(m)
}

pub fn write_matrix(path: &Path, m: &CMat, field: Field) -> Result<()> {
    let v = serde_json::to_value(MatrixData::with_field(m, field))?;
    fs::write(path, to_json_17(&v))?;
    Ok(())
}

/// Pretty JSON with every number written to 17 significant digits, so output
/// is byte-for-byte reproducible and round-trips exactly.
pub fn to_json_17(v: &Value) -> String {
    let mut s = String::new();
    write_value(v, 0, &mut s);
    s.push('\n');
    s
}

fn fmt_number(n: &serde_json::Number) -> String {
    if let Some(i) = n.as_i64() {
        return i.to_string();
    }
    if let Some(u) = n.as_u64() {
        return u.to_string();
    }
    match n.as_f64() {
        Some(x) if x.is_finite() => format!("{x:.16e}"),
        _ => "null".to_string(),
    }
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |k: usize| "  ".repeat(k);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => out.push_str(&fmt_number(n)),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serialises")),
        Value::Array(a) => {
            if a.is_empty() {
                out.push_str("[]");
                return;
            }
            let flat = a.iter().all(|x| x.is_number() || x.is_null());
            if flat {
                out.push('[');
                for (k, x) in a.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(x, indent, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, x) in a.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(x, indent + 1, out);
                if k + 1 < a.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(o) => {
            if o.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (k, (key, x)) in o.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(key).expect("key serialises"));
                out.push_str(": ");
                write_value(x, indent + 1, out);
                if k + 1 < o.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::from_complex;

    #[test]
    fn json_round_trip_is_exact() {
        let m = from_complex(2, 2, &[c(0.1, 0.0), c(1.0 / 3.0, -2.0), c(-0.0, 1e-300), c(5.0, 0.25)]);
        let v = serde_json::to_value(MatrixData::from_cmat(&m)).unwrap();
        let back = parse_matrix(&to_json_17(&v)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn plain_numbers_read_as_real() {
        let m = parse_matrix(r#"{"rows":1,"cols":2,"field":"real","data":[1.5,-2]}"#).unwrap();
        assert_eq!(m[(0, 1)], c(-2.0, 0.0));
    }

    #[test]
    fn wrong_length_is_a_format_error() {
        let e = parse_matrix(r#"{"rows":2,"cols":2,"field":"real","data":[1]}"#).unwrap_err();
        assert!(!e.is_mathematical());
    }

    #[test]
    fn matrix_market_symmetric_coordinate() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% c\n3 3 2\n1 1 2.0\n3 1 -1.5\n";
        let m = parse_matrix(text).unwrap();
        assert_eq!(m[(0, 2)], c(-1.5, 0.0));
        assert_eq!(m[(2, 0)], c(-1.5, 0.0));
    }

    #[test]
    fn matrix_market_array_is_column_major() {
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n";
        let m = parse_matrix(text).unwrap();
        assert_eq!(m[(1, 0)], c(2.0, 0.0));
        assert_eq!(m[(0, 1)], c(3.0, 0.0));
    }
}
