//! CSV and JSON artifacts.
//!
//! Every CSV file starts with a comment line `# config_hash=<hex>`; every JSON
//! artifact has a top-level `config_hash` field. Readers check the hash before
//! returning any data.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, LabResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A Monte Carlo result as written to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub name: String,
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub seed: Option<u64>,
    pub config_hash: String,
}

/// A file written by a command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Writes artifacts into one directory and remembers what it wrote.
#[derive(Debug)]
pub struct ArtifactSink {
    dir: PathBuf,
    config_hash: String,
    written: Vec<ArtifactEntry>,
}

impl ArtifactSink {
    pub fn new(dir: impl Into<PathBuf>, config_hash: impl Into<String>) -> LabResult<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, config_hash: config_hash.into(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn written(&self) -> &[ArtifactEntry] {
        &self.written
    }

    fn put(&mut self, file: &str, bytes: &[u8]) -> LabResult<()> {
        fs::write(self.dir.join(file), bytes)?;
        self.written.push(ArtifactEntry {
            file: file.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Writes a CSV table with the hash comment line.
    pub fn csv(&mut self, file: &str, header: &[&str], rows: &[Vec<String>]) -> LabResult<()> {
        let mut buf = format!("# config_hash={}\n", self.config_hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for r in rows {
                if r.len() != header.len() {
                    return Err(LabError::Artifact {
                        path: file.to_string(),
                        reason: format!("row has {} fields, header has {}", r.len(), header.len()),
                    });
                }
                w.write_record(r)?;
            }
            w.flush()?;
        }
        self.put(file, &buf)
    }

    /// Writes a JSON value; objects get a `config_hash` field.
    pub fn json<T: Serialize>(&mut self, file: &str, value: &T) -> LabResult<()> {
        let mut v = serde_json::to_value(value)?;
        if let serde_json::Value::Object(map) = &mut v {
            map.insert("config_hash".into(), self.config_hash.clone().into());
        }
        let mut bytes = serde_json::to_vec_pretty(&v)?;
        bytes.push(b'\n');
        self.put(file, &bytes)
    }
}

/// Shortest representation that reads back to the same `f64`, in scientific
/// notation outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// A CSV artifact read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub config_hash: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric column by name.
    pub fn floats(&self, name: &str) -> LabResult<Vec<f64>> {
        let i = self.column(name).ok_or_else(|| LabError::Artifact {
            path: String::new(),
            reason: format!("no column {name}"),
        })?;
        self.rows
            .iter()
            .map(|r| {
                r[i].parse::<f64>().map_err(|e| LabError::Artifact {
                    path: String::new(),
                    reason: format!("column {name}: {e}"),
                })
            })
            .collect()
    }
}

fn hash_line(path: &Path, text: &str) -> LabResult<String> {
    let first = text.lines().next().unwrap_or("");
    first
        .strip_prefix("# config_hash=")
        .map(|h| h.trim().to_string())
        .ok_or_else(|| LabError::Artifact {
            path: path.display().to_string(),
            reason: "missing config_hash comment line".into(),
        })
}

fn check(path: &Path, found: &str, expected: Option<&str>) -> LabResult<()> {
    match expected {
        Some(e) if e != found => Err(LabError::HashMismatch {
            path: path.display().to_string(),
            found: found.to_string(),
            expected: e.to_string(),
        }),
        _ => Ok(()),
    }
}

/// Reads a CSV artifact, refusing it when `expected_hash` is given and differs.
pub fn read_csv(path: &Path, expected_hash: Option<&str>) -> LabResult<Table> {
    let text = fs::read_to_string(path)?;
    let config_hash = hash_line(path, &text)?;
    check(path, &config_hash, expected_hash)?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(Table { config_hash, header, rows })
}

/// Reads a JSON artifact, refusing it when `expected_hash` is given and differs.
pub fn read_json(path: &Path, expected_hash: Option<&str>) -> LabResult<serde_json::Value> {
    let v: serde_json::Value = serde_json::from_slice(&fs::read(path)?)?;
    let found = v.get("config_hash").and_then(|h| h.as_str()).ok_or_else(|| LabError::Artifact {
        path: path.display().to_string(),
        reason: "missing config_hash field".into(),
    })?;
    check(path, found, expected_hash)?;
    Ok(v)
}
