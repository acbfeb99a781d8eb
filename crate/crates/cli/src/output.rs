//! Output writers: CSV (comma-separated, '.' decimal, header row, LF) and
//! pretty JSON. All files land inside the run's output directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(text: &str) -> Result<Self, String> {
        match text {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?}, expected csv or json")),
        }
    }
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, String> {
        fs::create_dir_all(root).map_err(|e| format!("cannot create {}: {e}", root.display()))?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_csv(
        &self,
        name: &str,
        comment: Option<&str>,
        header: &str,
        rows: impl Iterator<Item = String>,
    ) -> Result<PathBuf, String> {
        let path = self.path(name);
        let mut buf = String::new();
        if let Some(c) = comment {
            buf.push_str("# ");
            buf.push_str(c);
            buf.push('\n');
        }
        buf.push_str(header);
        buf.push('\n');
        for row in rows {
            buf.push_str(&row);
            buf.push('\n');
        }
        write_atomic(&path, buf.as_bytes())?;
        Ok(path)
    }

    /// Emit a data table as `<base>.csv` or `<base>.json` depending on the
    /// run's format choice. JSON carries the same cells as parsed numbers.
    pub fn write_table(
        &self,
        format: Format,
        base: &str,
        comment: Option<&str>,
        header: &str,
        rows: impl Iterator<Item = String>,
    ) -> Result<PathBuf, String> {
        match format {
            Format::Csv => self.write_csv(&format!("{base}.csv"), comment, header, rows),
            Format::Json => {
                let columns: Vec<&str> = header.split(',').collect();
                let data: Vec<serde_json::Value> = rows
                    .map(|row| {
                        let cells: Vec<serde_json::Value> = row
                            .split(',')
                            .map(|cell| match cell.parse::<f64>() {
                                Ok(v) if v.is_finite() => serde_json::json!(v),
                                _ => serde_json::json!(cell),
                            })
                            .collect();
                        serde_json::Value::Array(cells)
                    })
                    .collect();
                let mut obj = serde_json::json!({
                    "columns": columns,
                    "rows": data,
                });
                if let Some(c) = comment {
                    obj["comment"] = serde_json::json!(c);
                }
                self.write_json(&format!("{base}.json"), &obj)
            }
        }
    }

    pub fn write_json(&self, name: &str, value: &serde_json::Value) -> Result<PathBuf, String> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, String> {
        let path = self.path(name);
        write_atomic(&path, bytes)?;
        Ok(path)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), String> {
    let mut f =
        fs::File::create(path).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    f.write_all(bytes)
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Shortest round-trip decimal form (Display of f64), '.' decimal point.
pub fn num(v: f64) -> String {
    format!("{v}")
}
