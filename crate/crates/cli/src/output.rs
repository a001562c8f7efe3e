//! Table model shared by every command, with CSV and JSON writers.

use std::fmt::Write as _;

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }
}

/// Nine significant digits; plain notation in the human range, scientific
/// outside it.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let a = v.abs();
    if (1e-4..1e7).contains(&a) {
        format!("{v:.9}")
    } else {
        format!("{v:.9e}")
    }
}

fn cell_csv(c: &Cell) -> String {
    match c {
        Cell::Num(v) => fmt_num(*v),
        Cell::Text(t) => t.clone(),
    }
}

pub fn to_csv(tables: &[Table]) -> String {
    let mut out = String::new();
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "# {}", t.name);
        let _ = writeln!(out, "{}", t.columns.join(","));
        for row in &t.rows {
            let cells: Vec<String> = row.iter().map(cell_csv).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
    }
    out
}

pub fn to_json(tables: &[Table]) -> String {
    use serde_json::{json, Map, Value};
    let tables: Vec<Value> = tables
        .iter()
        .map(|t| {
            let rows: Vec<Value> = t
                .rows
                .iter()
                .map(|row| {
                    let mut rec = Map::new();
                    for (col, cell) in t.columns.iter().zip(row) {
                        let v = match cell {
                            Cell::Num(x) if x.is_finite() => json!(x),
                            Cell::Num(x) => json!(x.to_string()),
                            Cell::Text(s) => json!(s),
                        };
                        rec.insert(col.clone(), v);
                    }
                    Value::Object(rec)
                })
                .collect();
            json!({ "name": t.name, "columns": t.columns, "rows": rows })
        })
        .collect();
    serde_json::to_string_pretty(&json!({ "tables": tables })).expect("json encoding")
}
