//! Curve files: CSV with one row of comma-separated values per graph, each
//! row preceded by a `# key=value key=value` metadata line.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurveRow {
    /// Ordered metadata pairs; keys and values must not contain whitespace.
    pub meta: Vec<(String, String)>,
    pub values: Vec<f64>,
}

impl CurveRow {
    pub fn new(values: Vec<f64>) -> Self {
        CurveRow { meta: Vec::new(), values }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Fixed 15 decimals: at least 12 significant digits for values >= 1e-3.
pub(crate) fn fmt_value(v: f64) -> String {
    format!("{v:.15}")
}

pub fn write_curves<W: Write>(mut w: W, rows: &[CurveRow]) -> Result<()> {
    for row in rows {
        if !row.meta.is_empty() {
            let meta: Vec<String> = row.meta.iter().map(|(k, v)| format!("{k}={v}")).collect();
            writeln!(w, "# {}", meta.join(" "))?;
        }
        let vals: Vec<String> = row.values.iter().map(|&v| fmt_value(v)).collect();
        writeln!(w, "{}", vals.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curves<R: BufRead>(r: R) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::new();
    let mut pending = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            pending.clear();
            for tok in meta.split_whitespace() {
                let (k, v) = tok
                    .split_once('=')
                    .ok_or_else(|| Error::parse(idx + 1, format!("metadata token {tok:?} is not key=value")))?;
                pending.push((k.to_string(), v.to_string()));
            }
            continue;
        }
        let values = line
            .split(',')
            .map(|f| f.trim().parse::<f64>().map_err(|_| Error::parse(idx + 1, format!("bad value {f:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(CurveRow { meta: std::mem::take(&mut pending), values });
    }
    Ok(rows)
}
