//! JSON channel files: `{"name": "...", "w1": [[...], ...], "w2": [[...], ...]}`.

use std::path::Path;

use dbx_core::prob::validate_rows;
use dbx_core::{DegradedPair, StochasticMatrix};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub w1: Vec<Vec<f64>>,
    pub w2: Vec<Vec<f64>>,
}

fn kernel(field: &str, rows: &[Vec<f64>]) -> Result<StochasticMatrix, CliError> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(CliError::Parse(format!("{field}: matrix is empty")));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(CliError::Parse(format!(
            "{field} row {i}: {} entries, expected {cols}",
            r.len()
        )));
    }
    let flat: Vec<f64> = rows.concat();
    let report = validate_rows(&flat, rows.len(), cols);
    if !report.is_ok() {
        return Err(CliError::Parse(format!("{field}: {report}")));
    }
    StochasticMatrix::new(rows.len(), cols, flat).map_err(|e| CliError::Parse(format!("{field}: {e}")))
}

impl ChannelSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_channel(&self) -> Result<DegradedPair, CliError> {
        let w1 = kernel("w1", &self.w1)?;
        let w2 = kernel("w2", &self.w2)?;
        DegradedPair::new(w1, w2).map_err(|e| CliError::Parse(e.to_string()))
    }
}
