//! Tabular output: one column schema per subcommand, emitted as RFC-4180 CSV
//! (with a commented metadata preamble) or as a single JSON document
//! `{meta, config, rows}`.
//!
//! Numbers are printed in Rust's shortest round-trip decimal form; complex
//! values always travel as paired re/im columns. Data rows are a pure
//! function of the resolved config — timestamps live only in the metadata
//! block.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Map, Value};

/// One table cell.
#[derive(Debug, Clone)]
pub enum Cell {
    Str(String),
    F(f64),
    U(u64),
    B(bool),
    Empty,
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::F(v) => format!("{v}"),
            Cell::U(v) => format!("{v}"),
            Cell::B(v) => format!("{v}"),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Str(s) => Value::String(s.clone()),
            Cell::F(v) => json!(v),
            Cell::U(v) => json!(v),
            Cell::B(v) => json!(v),
            Cell::Empty => Value::Null,
        }
    }
}

/// A column schema plus rows.
#[derive(Debug, Clone)]
pub struct RowSet {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl RowSet {
    pub fn new(columns: Vec<&'static str>) -> RowSet {
        RowSet {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Run-level metadata; the timestamp is the only nondeterministic field.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub rng_algorithm: &'static str,
    pub seed: u64,
    pub generated_unix: u64,
    /// Subcommand-specific annotations (e.g. whether the digraph is simple).
    pub notes: Map<String, Value>,
}

pub fn emit_csv<W: Write>(
    mut w: W,
    meta: &Meta,
    config: &impl Serialize,
    rows: &RowSet,
) -> std::io::Result<()> {
    writeln!(w, "# {} {}", meta.tool, meta.version)?;
    writeln!(w, "# rng: {}", meta.rng_algorithm)?;
    writeln!(w, "# seed: {}", meta.seed)?;
    writeln!(w, "# config: {}", serde_json::to_string(config)?)?;
    for (k, v) in &meta.notes {
        writeln!(w, "# {k}: {v}")?;
    }
    writeln!(w, "# generated_unix: {}", meta.generated_unix)?;
    let mut csv = csv::WriterBuilder::new().from_writer(w);
    csv.write_record(&rows.columns)?;
    for row in &rows.rows {
        csv.write_record(row.iter().map(|c| c.to_csv()))?;
    }
    csv.flush()?;
    Ok(())
}

pub fn emit_json<W: Write>(
    mut w: W,
    meta: &Meta,
    config: &impl Serialize,
    rows: &RowSet,
) -> std::io::Result<()> {
    let rows_json: Vec<Value> = rows
        .rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            for (col, cell) in rows.columns.iter().zip(row) {
                obj.insert((*col).to_string(), cell.to_json());
            }
            Value::Object(obj)
        })
        .collect();
    let doc = json!({
        "meta": meta,
        "config": config,
        "rows": rows_json,
    });
    writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)
}
