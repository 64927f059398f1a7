//! CSV files with a schema row. The first line names the schema and the
//! manifest that produced the file; the loader refuses other schemas or
//! column sets.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsvTable {
    pub schema: String,
    pub manifest: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest round-tripping text for a float; `nan`, `inf`, `-inf` otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn parse_f64(s: &str) -> Option<f64> {
    match s {
        "" => None,
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

fn schema_line(schema: &str, manifest: &str) -> String {
    format!("# schema={schema} manifest={manifest}")
}

fn parse_schema_line(line: &str) -> Option<(String, String)> {
    let rest = line.strip_prefix("# schema=")?;
    let (schema, manifest) = rest.split_once(" manifest=")?;
    Some((schema.to_string(), manifest.trim_end().to_string()))
}

impl CsvTable {
    pub fn new(schema: &str, manifest: &str, columns: &[&str]) -> Self {
        CsvTable {
            schema: schema.into(),
            manifest: manifest.into(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut f = BufWriter::new(f);
        writeln!(f, "{}", schema_line(&self.schema, &self.manifest)).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(&self.columns).map_err(|e| Error::csv(path, e))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a table, rejecting any schema or header other than the
    /// expected ones.
    pub fn read(path: &Path, schema: &str, columns: &[&str]) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(f);
        let mut first = String::new();
        reader.read_line(&mut first).map_err(|e| Error::io(path, e))?;
        let (found_schema, manifest) = parse_schema_line(first.trim_end_matches(['\n', '\r'])).ok_or_else(|| {
            Error::Malformed {
                path: path.into(),
                detail: "missing schema row".into(),
            }
        })?;
        if found_schema != schema {
            return Err(Error::Schema {
                path: path.into(),
                expected: vec![schema.into()],
                found: vec![found_schema],
            });
        }
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> = r.headers().map_err(|e| Error::csv(path, e))?.iter().map(String::from).collect();
        if header != columns {
            return Err(Error::Schema {
                path: path.into(),
                expected: columns.iter().map(|s| s.to_string()).collect(),
                found: header,
            });
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            rows.push(rec.iter().map(String::from).collect());
        }
        Ok(CsvTable {
            schema: found_schema,
            manifest,
            columns: header,
            rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = CsvTable::new("demo/1", "abc123", &["x", "label"]);
        t.push(vec![fmt_f64(0.1), "a, quoted \"one\"".into()]);
        t.push(vec![fmt_f64(f64::INFINITY), String::new()]);
        let p = dir.path().join("t.csv");
        t.write(&p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        let back = CsvTable::read(&p, "demo/1", &["x", "label"]).unwrap();
        assert_eq!(back, t);
        let q = dir.path().join("u.csv");
        back.write(&q).unwrap();
        assert_eq!(std::fs::read(&q).unwrap(), bytes);
        assert!(matches!(CsvTable::read(&p, "demo/2", &["x", "label"]), Err(Error::Schema { .. })));
        assert!(matches!(CsvTable::read(&p, "demo/1", &["x"]), Err(Error::Schema { .. })));
        assert_eq!(parse_f64("inf"), Some(f64::INFINITY));
        assert_eq!(parse_f64(&fmt_f64(0.1)), Some(0.1));
    }
}
