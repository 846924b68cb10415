//! Numeric tables written as CSV or JSON.
//!
//! Floats are written in shortest round-trip exponent form (`2.5e-15`),
//! integers as plain digits, so reading a file back and writing it again
//! reproduces it byte for byte. JSON documents carry a `provenance` object
//! followed by one object per row.

use std::fs;
use std::io;
use std::path::Path;

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl Cell {
    pub fn as_f64(self) -> f64 {
        match self {
            Cell::Int(i) => i as f64,
            Cell::Float(x) => x,
        }
    }

    fn to_csv(self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format!("{x:e}"),
        }
    }

    fn parse_csv(text: &str) -> Option<Self> {
        if text.contains(['e', 'E', '.', 'i', 'n', 'N']) {
            text.parse().ok().map(Cell::Float)
        } else {
            text.parse().ok().map(Cell::Int)
        }
    }

    fn to_json(self) -> Value {
        match self {
            Cell::Int(i) => Value::from(i),
            Cell::Float(x) => Number::from_f64(x).map_or(Value::Null, Value::Number),
        }
    }

    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::Number(n) if n.is_i64() => n.as_i64().map(Cell::Int),
            Value::Number(n) => n.as_f64().map(Cell::Float),
            Value::Null => Some(Cell::Float(f64::NAN)),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Shape { path: String, message: String },
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k].as_f64()).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_csv()))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn from_csv(text: &str, path: &str) -> Result<Self, TableError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let columns: Vec<String> = r
            .headers()
            .map_err(|source| TableError::Csv {
                path: path.into(),
                source,
            })?
            .iter()
            .map(String::from)
            .collect();
        let mut table = Table::new(columns);
        for (line, record) in r.records().enumerate() {
            let record = record.map_err(|source| TableError::Csv {
                path: path.into(),
                source,
            })?;
            let row = record
                .iter()
                .map(|f| {
                    Cell::parse_csv(f).ok_or_else(|| TableError::Shape {
                        path: path.into(),
                        message: format!("row {}: cannot read {f:?} as a number", line + 1),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            table.rows.push(row);
        }
        Ok(table)
    }

    /// `{"provenance": …, "<rows_key>": [{column: value, …}, …]}`.
    pub fn to_json(&self, provenance: &Value, rows_key: &str) -> String {
        let mut doc = Map::new();
        doc.insert("provenance".into(), provenance.clone());
        let rows = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    self.columns
                        .iter()
                        .cloned()
                        .zip(row.iter().map(|c| c.to_json()))
                        .collect(),
                )
            })
            .collect();
        doc.insert(rows_key.into(), Value::Array(rows));
        to_pretty(&Value::Object(doc))
    }

    /// Inverse of [`Table::to_json`]; returns the table and the provenance.
    pub fn from_json(text: &str, rows_key: &str, path: &str) -> Result<(Self, Value), TableError> {
        let doc: Value = serde_json::from_str(text).map_err(|source| TableError::Json {
            path: path.into(),
            source,
        })?;
        let shape = |message: &str| TableError::Shape {
            path: path.into(),
            message: message.into(),
        };
        let provenance = doc.get("provenance").cloned().unwrap_or(Value::Null);
        let rows = doc
            .get(rows_key)
            .and_then(Value::as_array)
            .ok_or_else(|| shape("missing row array"))?;
        let columns: Vec<String> = match rows.first() {
            Some(Value::Object(m)) => m.keys().cloned().collect(),
            Some(_) => return Err(shape("rows must be objects")),
            None => Vec::new(),
        };
        let mut table = Table::new(columns.clone());
        for row in rows {
            let obj = row.as_object().ok_or_else(|| shape("rows must be objects"))?;
            if obj.len() != columns.len() {
                return Err(shape("rows differ in width"));
            }
            let cells = columns
                .iter()
                .map(|c| obj.get(c).and_then(Cell::from_json))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| shape("non-numeric or missing cell"))?;
            table.rows.push(cells);
        }
        Ok((table, provenance))
    }
}

pub fn to_pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value serializes");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<(), TableError> {
    fs::write(path, text).map_err(|source| TableError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_text(path: &Path) -> Result<String, TableError> {
    fs::read_to_string(path).map_err(|source| TableError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Re-serializes a file written by this crate: CSV through [`Table`],
/// JSON through [`Value`].
pub fn reserialize(path: &Path) -> Result<String, TableError> {
    let text = read_text(path)?;
    let name = path.display().to_string();
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(Table::from_csv(&text, &name)?.to_csv()),
        _ => {
            let value: Value = serde_json::from_str(&text).map_err(|source| TableError::Json {
                path: name,
                source,
            })?;
            Ok(to_pretty(&value))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    fn sample() -> Table {
        let mut t = Table::new(["index", "x_m", "flux_Wb"]);
        t.push(vec![0usize.into(), (-2.5e-5).into(), 7.917e-16.into()]);
        t.push(vec![1usize.into(), 0.0.into(), 1.0339169242309647e-15.into()]);
        t.push(vec![2usize.into(), (-0.0).into(), 1e300.into()]);
        t
    }

    #[test]
    fn csv_layout_and_round_trip() {
        let t = sample();
        let text = t.to_csv();
        assert!(text.starts_with("index,x_m,flux_Wb\n0,-2.5e-5,7.917e-16\n"));
        let back = Table::from_csv(&text, "t").unwrap();
        assert_eq!(back.to_csv(), text);
        assert_eq!(back.rows[0][0], Cell::Int(0));
        assert_eq!(back.rows[2][1].as_f64().to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn json_round_trip_keeps_column_order() {
        let t = sample();
        let prov = json!({"b0_m": 1e-4, "label": "test"});
        let text = t.to_json(&prov, "samples");
        let (back, p) = Table::from_json(&text, "samples", "t").unwrap();
        assert_eq!(back, t);
        assert_eq!(p, prov);
        assert_eq!(back.to_json(&p, "samples"), text);
    }

    #[test]
    fn bad_cells_are_reported() {
        assert!(Table::from_csv("a,b\n1,x\n", "t").is_err());
        assert!(Table::from_json("{\"rows\": [1]}", "rows", "t").is_err());
    }

    proptest! {
        #[test]
        fn any_finite_float_round_trips(xs in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 1..20)) {
            let mut t = Table::new(["k", "v"]);
            for (k, &x) in xs.iter().enumerate() {
                t.push(vec![k.into(), x.into()]);
            }
            let csv = t.to_csv();
            let back = Table::from_csv(&csv, "p").unwrap();
            prop_assert_eq!(back.to_csv(), csv);
            for (row, &x) in back.rows.iter().zip(&xs) {
                prop_assert_eq!(row[1].as_f64().to_bits(), x.to_bits());
            }
            let js = t.to_json(&Value::Null, "rows");
            let (jt, _) = Table::from_json(&js, "rows", "p").unwrap();
            prop_assert_eq!(jt.to_json(&Value::Null, "rows"), js);
        }
    }
}
