//! Artifact writers. Every file carries the config hash: CSVs as a leading
//! `#` comment, JSON documents as a `config_sha256` field.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

pub struct OutDir {
    pub dir: PathBuf,
    pub hash: String,
}

impl OutDir {
    pub fn create(dir: &Path, hash: String) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(OutDir { dir: dir.to_path_buf(), hash })
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut buf = format!("# config_sha256={}\n", self.hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        fs::write(self.dir.join(name), buf)?;
        Ok(())
    }

    /// Writes `body` with the hash merged in at the top level.
    pub fn json<T: Serialize>(&self, name: &str, body: &T) -> Result<(), CliError> {
        let mut value = serde_json::to_value(body)?;
        match &mut value {
            Value::Object(map) => {
                map.insert("config_sha256".into(), Value::String(self.hash.clone()));
            }
            other => value = json!({ "config_sha256": self.hash, "data": other.clone() }),
        }
        let mut text = serde_json::to_string_pretty(&value)?;
        text.push('\n');
        fs::write(self.dir.join(name), text)?;
        Ok(())
    }
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Reads a CSV written by [`OutDir::csv`], skipping the comment line.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(str::to_owned).collect();
    let rows = r.records().collect::<Result<Vec<_>, _>>()?;
    Ok((header, rows))
}
