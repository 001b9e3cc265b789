use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::NormalScore;

pub const RESULTS_VERSION: u32 = 1;

/// JSON Schema of the serialized [`ResultsTable`].
pub const RESULTS_SCHEMA: &str = r##"{
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "results table",
  "type": "object",
  "additionalProperties": false,
  "required": ["version", "metadata", "splits", "rows"],
  "properties": {
    "version": { "const": 1 },
    "metadata": {
      "type": "object",
      "additionalProperties": false,
      "required": ["domain", "ssim_channel", "dssim"],
      "properties": {
        "domain": { "enum": ["ldr", "linear"] },
        "ssim_channel": { "const": "luminance" },
        "dssim": { "const": "(1 - ssim) / 2" }
      }
    },
    "splits": { "type": "array", "items": { "type": "string" }, "minItems": 1 },
    "rows": {
      "type": "array",
      "minItems": 1,
      "items": {
        "type": "object",
        "additionalProperties": false,
        "required": ["method", "scores"],
        "properties": {
          "method": { "type": "string" },
          "scores": {
            "type": "array",
            "items": {
              "oneOf": [
                { "type": "null" },
                {
                  "type": "object",
                  "additionalProperties": false,
                  "required": ["mse", "dssim", "items"],
                  "properties": {
                    "mse": { "type": "number", "minimum": 0 },
                    "dssim": { "type": "number", "minimum": 0, "maximum": 1 },
                    "items": { "type": "integer", "minimum": 1 },
                    "failed": { "type": "integer", "minimum": 0 },
                    "normals": {
                      "type": "object",
                      "additionalProperties": false,
                      "required": ["mean", "median", "rmse", "pixels"],
                      "properties": {
                        "mean": { "type": "number" },
                        "median": { "type": "number" },
                        "rmse": { "type": "number" },
                        "pixels": { "type": "integer" }
                      }
                    }
                  }
                }
              ]
            }
          }
        }
      }
    }
  }
}
"##;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableError {
    #[error("no method was evaluated")]
    NoMethods,
    #[error("row {method} has {actual} score columns for {expected} splits")]
    Columns { method: String, expected: usize, actual: usize },
    #[error("results record: {0}")]
    Json(String),
    #[error("unsupported results version {0}")]
    Version(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableMetadata {
    pub domain: String,
    pub ssim_channel: String,
    pub dssim: String,
}

impl TableMetadata {
    pub fn new(linear: bool) -> Self {
        Self {
            domain: if linear { "linear" } else { "ldr" }.into(),
            ssim_channel: "luminance".into(),
            dssim: "(1 - ssim) / 2".into(),
        }
    }
}

/// Aggregate over the items of one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitScore {
    pub mse: f64,
    pub dssim: f64,
    pub items: usize,
    /// Items that could not be scored.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub failed: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normals: Option<NormalScore>,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodRow {
    pub method: String,
    /// One entry per split, `None` where the method was not run.
    pub scores: Vec<Option<SplitScore>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultsTable {
    pub version: u32,
    pub metadata: TableMetadata,
    pub splits: Vec<String>,
    pub rows: Vec<MethodRow>,
}

/// Builds the table; rows keep the given method order.
pub fn emit_results_table(splits: Vec<String>, rows: Vec<MethodRow>, metadata: TableMetadata) -> Result<ResultsTable, TableError> {
    let t = ResultsTable { version: RESULTS_VERSION, metadata, splits, rows };
    t.check()?;
    Ok(t)
}

impl ResultsTable {
    fn check(&self) -> Result<(), TableError> {
        if self.version != RESULTS_VERSION {
            return Err(TableError::Version(self.version));
        }
        if self.rows.is_empty() {
            return Err(TableError::NoMethods);
        }
        for r in &self.rows {
            if r.scores.len() != self.splits.len() {
                return Err(TableError::Columns { method: r.method.clone(), expected: self.splits.len(), actual: r.scores.len() });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable table");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, TableError> {
        let t: ResultsTable = serde_json::from_str(text).map_err(|e| TableError::Json(e.to_string()))?;
        t.check()?;
        Ok(t)
    }

    /// Aligned plain-text rendering: one row per method, MSE and DSSIM
    /// columns per split.
    pub fn render(&self) -> String {
        let mut header = vec!["method".to_string()];
        for s in &self.splits {
            header.push(format!("{s} MSE"));
            header.push(format!("{s} DSSIM"));
        }
        let mut cells = vec![header];
        for r in &self.rows {
            let mut row = vec![r.method.clone()];
            for s in &r.scores {
                match s {
                    Some(s) => {
                        row.push(format!("{:.6}", s.mse));
                        row.push(format!("{:.4}", s.dssim));
                    }
                    None => {
                        row.push("-".into());
                        row.push("-".into());
                    }
                }
            }
            cells.push(row);
        }
        let widths: Vec<usize> = (0..cells[0].len()).map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for (k, row) in cells.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (v, &w))| if c == 0 { format!("{v:<w$}") } else { format!("{v:>w$}") })
                .collect();
            writeln!(out, "{}", line.join("  ").trim_end()).unwrap();
            if k == 0 {
                writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1))).unwrap();
            }
        }
        let normals: Vec<_> = self
            .rows
            .iter()
            .flat_map(|r| r.scores.iter().zip(&self.splits).filter_map(move |(s, split)| Some((r, split, s.as_ref()?.normals?))))
            .collect();
        if !normals.is_empty() {
            writeln!(out, "\nnormal error (degrees)").unwrap();
            for (r, split, n) in normals {
                writeln!(out, "{} [{split}]  mean {:.2}  median {:.2}  rmse {:.2}", r.method, n.mean, n.median, n.rmse).unwrap();
            }
        }
        out
    }
}
