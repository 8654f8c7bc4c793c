//! Metric logs: named columns, rows of values, serialised as RFC-4180 CSV
//! with LF line endings. Numbers are formatted with Rust's shortest
//! round-trip notation, so logs are byte-stable for identical inputs.

use anyhow::{ensure, Result};
use std::path::Path;

#[derive(Debug, Clone)]
pub struct MetricLog {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl MetricLog {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) -> Result<()> {
        ensure!(
            row.len() == self.columns.len(),
            "metric row has {} fields, log has {} columns",
            row.len(),
            self.columns.len()
        );
        self.rows.push(row);
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        render_row(&mut out, &self.columns);
        for row in &self.rows {
            render_row(&mut out, row);
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())
            .map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))
    }
}

fn render_row(out: &mut String, fields: &[String]) {
    for (i, field) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        if field.contains(['"', ',', '\n', '\r']) {
            out.push('"');
            out.push_str(&field.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(field);
        }
    }
    out.push('\n');
}

/// Canonical numeric cell formatting (shortest round-trip; infinities print
/// as `inf`/`-inf`, which `f64::from_str` accepts back).
pub fn num(v: f64) -> String {
    format!("{v}")
}
