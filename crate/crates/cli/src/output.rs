//! Report rendering: a fixed-column table for CSV and a JSON document
//! carrying the full diagnostics.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One cell of a CSV row.
pub fn cell<T: ToString>(v: T) -> String {
    v.to_string()
}

/// Empty when absent.
pub fn opt_cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &'static [&'static str]) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }
}

pub struct Report {
    pub command: &'static str,
    pub table: Table,
    /// Command-specific payload merged into the JSON envelope.
    pub body: Value,
    /// Set when the command ran but found a failed check.
    pub failed: bool,
}

impl Report {
    pub fn new<T: Serialize>(command: &'static str, table: Table, body: &T) -> Self {
        Self {
            command,
            table,
            body: serde_json::to_value(body).expect("report bodies serialize"),
            failed: false,
        }
    }

    pub fn render(&self, format: Format) -> io::Result<Vec<u8>> {
        match format {
            Format::Csv => self.table.to_csv(),
            Format::Json => {
                let mut doc = json!({
                    "schema_version": SCHEMA_VERSION,
                    "command": self.command,
                });
                match &self.body {
                    Value::Object(map) => {
                        for (k, v) in map {
                            doc[k] = v.clone();
                        }
                    }
                    other => doc["result"] = other.clone(),
                }
                let mut out = serde_json::to_vec_pretty(&doc)?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }

    pub fn emit(&self, format: Format, out: Option<&Path>) -> io::Result<()> {
        let bytes = self.render(format)?;
        match out {
            Some(path) => fs::write(path, bytes),
            None => io::stdout().lock().write_all(&bytes),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rendering() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![cell(1), opt_cell::<f64>(None)]);
        t.push(vec![cell(0.5), opt_cell(Some("x,y"))]);
        assert_eq!(
            String::from_utf8(t.to_csv().unwrap()).unwrap(),
            "a,b\n1,\n0.5,\"x,y\"\n"
        );
    }

    #[test]
    fn json_envelope() {
        let r = Report::new("demo", Table::new(&["a"]), &json!({"value": 3}));
        let v: Value = serde_json::from_slice(&r.render(Format::Json).unwrap()).unwrap();
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["command"], "demo");
        assert_eq!(v["value"], 3);
    }
}
