//! CSV output with full-precision scientific notation.

use std::fs::File;
use std::path::Path;

use anyhow::{Context, Result};

/// `{:.17e}`: round-trips every finite `f64`.
pub fn sci(x: f64) -> String {
    format!("{x:.17e}")
}

pub struct CsvFile {
    writer: csv::Writer<File>,
    path: String,
}

impl CsvFile {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        writer.write_record(header)?;
        Ok(Self { writer, path: path.display().to_string() })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        self.writer.write_record(fields).with_context(|| format!("writing {}", self.path))
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().with_context(|| format!("flushing {}", self.path))
    }
}
