//! Deterministic artifact emission: CSV (RFC-4180-style, 17 significant
//! digits), JSON, SVG, and a manifest listing every emitted file with its
//! content hash.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

use crate::util::fmt_f64;

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Collects files for one run and writes `manifest.json` at the end.
pub struct ArtifactWriter {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), entries: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            sha256: format!("{:x}", hasher.finalize()),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// CSV with a header row, comma separator, CRLF line endings, '.' decimal
    /// separator, floats at 17 significant digits.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<CsvField>]) -> std::io::Result<()> {
        let mut out = String::new();
        out.push_str(&header.join(","));
        out.push_str("\r\n");
        for row in rows {
            let fields: Vec<String> = row.iter().map(CsvField::render).collect();
            out.push_str(&fields.join(","));
            out.push_str("\r\n");
        }
        self.write_bytes(name, out.as_bytes())
    }

    /// Write `manifest.json` and return the collected entries.
    pub fn finish(self, meta: serde_json::Value) -> std::io::Result<Vec<ManifestEntry>> {
        let manifest = serde_json::json!({
            "files": self.entries,
            "meta": meta,
        });
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text.as_bytes())?;
        Ok(self.entries)
    }
}

/// One CSV field; floats render at 17 significant digits so re-runs are
/// byte-identical.
pub enum CsvField {
    Float(f64),
    Int(i64),
    UInt(u64),
    Str(String),
    Bool(bool),
}

impl CsvField {
    fn render(&self) -> String {
        match self {
            CsvField::Float(x) => fmt_f64(*x),
            CsvField::Int(x) => x.to_string(),
            CsvField::UInt(x) => x.to_string(),
            CsvField::Bool(x) => x.to_string(),
            CsvField::Str(s) => {
                if s.contains(',') || s.contains('"') || s.contains('\n') {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
        }
    }
}
