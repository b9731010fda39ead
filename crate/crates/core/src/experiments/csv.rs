//! Minimal deterministic CSV output. Fields never contain separators.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::ExperimentError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Table {
    text: String,
    columns: usize,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self {
            text,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.columns);
        let _ = writeln!(self.text, "{}", fields.join(","));
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf, ExperimentError> {
        let path = dir.join(name);
        std::fs::write(&path, &self.text).map_err(|e| ExperimentError::io(&path, e))?;
        Ok(path)
    }
}
