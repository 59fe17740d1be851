//! CSV and JSON writers. Every output starts with the same metadata: tool,
//! version, command, the resolved configuration, the seed and the quadrature
//! tolerances.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use gbayes_core::numerics::QuadratureSpec;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::args::Format;
use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct Metadata {
    fields: Map<String, Value>,
}

impl Metadata {
    pub fn new(command: &str, config: impl Serialize, seed: u64, quadrature: &QuadratureSpec) -> Self {
        let mut fields = Map::new();
        fields.insert("tool".into(), json!("gbayes"));
        fields.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        fields.insert("command".into(), json!(command));
        fields.insert("config".into(), serde_json::to_value(config).expect("config serializes"));
        fields.insert("seed".into(), json!(seed));
        fields.insert("relative_tolerance".into(), json!(quadrature.relative_tolerance));
        fields.insert("absolute_tolerance".into(), json!(quadrature.absolute_tolerance));
        Self { fields }
    }

    pub fn insert(&mut self, key: &str, value: impl Serialize) {
        self.fields
            .insert(key.into(), serde_json::to_value(value).expect("metadata serializes"));
    }

    pub fn to_value(&self) -> Value {
        Value::Object(self.fields.clone())
    }

    /// `# key=value` lines; nested values are written as compact JSON.
    fn csv_header(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.fields {
            let text = match value {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("# {key}={text}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(t) => t.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(x) => num(*x),
            Cell::Int(n) => json!(n),
            Cell::Bool(b) => json!(b),
            Cell::Text(t) => json!(t),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

/// A rectangular result: one CSV header line and comma-separated rows, or an
/// array of objects in JSON.
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Shortest representation that reads back to the same `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

/// A JSON number, or `null` for values JSON cannot hold.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn render_table(meta: &Metadata, table: &Table, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut out = meta.csv_header();
            out.push_str(&table.columns.join(","));
            out.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    let object: Map<String, Value> =
                        table.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                    Value::Object(object)
                })
                .collect();
            render_json(&json!({ "metadata": meta.to_value(), "rows": rows }))
        }
    }
}

pub fn render_json(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    text
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}
