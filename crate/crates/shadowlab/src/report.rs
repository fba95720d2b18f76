//! Run reports: one JSON document per run with a config echo, result rows,
//! and named pass/fail checks, plus an optional CSV export of the rows.
//!
//! Rows are serialized in construction order with struct-ordered fields, so
//! two runs with the same config and seed emit byte-identical rows.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
    pub rows: Vec<Value>,
    pub checks: Vec<Check>,
    pub wall_ms: u128,
}

impl Report {
    pub fn new(command: &str, config: Value) -> Report {
        Report {
            tool: "shadowlab",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config,
            rows: Vec::new(),
            checks: Vec::new(),
            wall_ms: 0,
        }
    }

    pub fn push_row<T: Serialize>(&mut self, row: &T) -> Result<()> {
        self.rows.push(
            serde_json::to_value(row)
                .map_err(|e| Error::Invalid(format!("row serialization failed: {e}")))?,
        );
        Ok(())
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: Option<String>) {
        self.checks.push(Check { name: name.to_string(), pass, detail });
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Invalid(format!("report serialization failed: {e}")))
    }

    /// Rows as a CSV table: columns are the sorted union of top-level keys;
    /// nested values are embedded as compact JSON.
    pub fn rows_to_csv(&self) -> String {
        let mut columns: Vec<String> = Vec::new();
        for row in &self.rows {
            if let Value::Object(map) = row {
                for key in map.keys() {
                    if !columns.contains(key) {
                        columns.push(key.clone());
                    }
                }
            }
        }
        columns.sort();
        let mut out = String::new();
        out.push_str(&columns.iter().map(|c| csv_escape(c)).collect::<Vec<_>>().join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = columns
                .iter()
                .map(|c| match row.get(c) {
                    None | Some(Value::Null) => String::new(),
                    Some(Value::String(s)) => csv_escape(s),
                    Some(other) => csv_escape(&other.to_string()),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn report_round_trip_and_pass_logic() {
        let mut r = Report::new("probe", json!({"seed": 7}));
        r.push_row(&json!({"delta": "2^-3", "pass": true})).unwrap();
        r.check("bound", true, None);
        assert!(r.pass());
        r.check("other", false, Some("boom".into()));
        assert!(!r.pass());
        let text = r.to_json().unwrap();
        assert!(text.contains("\"command\": \"probe\""));
    }

    #[test]
    fn csv_export_unions_columns_and_escapes() {
        let mut r = Report::new("modulus", json!({}));
        r.push_row(&json!({"a": 1, "b": "x,y"})).unwrap();
        r.push_row(&json!({"b": "plain", "c": {"n": 2}})).unwrap();
        let csv = r.rows_to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "a,b,c");
        assert_eq!(lines.next().unwrap(), "1,\"x,y\",");
        assert_eq!(lines.next().unwrap(), ",plain,\"{\"\"n\"\":2}\"");
    }
}
