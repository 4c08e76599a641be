use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};
use sgm_core::LogReal;

use crate::args::Format;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Num,
    Text,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<(&'static str, Kind)>,
    pub rows: Vec<Vec<String>>,
    pub meta: Vec<(String, String)>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[(&'static str, Kind)]) -> Self {
        Table {
            name,
            columns: columns.to_vec(),
            rows: Vec::new(),
            meta: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|(c, _)| *c == name)
    }

    /// Values of one column, in row order.
    pub fn get(&self, name: &str) -> Vec<&str> {
        let i = self.column(name).unwrap_or_else(|| panic!("no column `{name}` in {}", self.name));
        self.rows.iter().map(|r| r[i].as_str()).collect()
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|(c, _)| *c))?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let mut buf = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        for (k, v) in &self.meta {
            writeln!(buf, "# {k}: {v}")?;
        }
        String::from_utf8(buf).map_err(|e| CliError::Config(e.to_string()))
    }

    fn to_json(&self) -> Result<String, CliError> {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|((name, kind), cell)| (name.to_string(), json_cell(*kind, cell)))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        Ok(serde_json::to_string_pretty(&records)? + "\n")
    }

    pub fn write(&self, dir: &Path, format: Format) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.{}", self.name, format.extension()));
        fs::write(path, self.render(format)?)?;
        Ok(())
    }
}

fn json_cell(kind: Kind, cell: &str) -> Value {
    if kind == Kind::Num {
        if cell.is_empty() {
            return Value::Null;
        }
        if let Ok(i) = cell.parse::<i64>() {
            return Value::from(i);
        }
        if let Some(v) = cell.parse::<f64>().ok().and_then(serde_json::Number::from_f64) {
            return Value::Number(v);
        }
    }
    Value::String(cell.to_string())
}

pub fn fixed(v: f64, digits: usize) -> String {
    format!("{v:.digits$}")
}

pub fn sci(v: f64) -> String {
    format!("{v:.9e}")
}

/// `(sign, log10|v|, decimal)` columns for a log-domain quantity.
pub fn log_columns(v: LogReal) -> [String; 3] {
    if v.is_zero() {
        return ["0".into(), String::new(), "0".into()];
    }
    [v.sign().to_string(), fixed(v.log10_abs(), 6), format!("{v:.6}")]
}
