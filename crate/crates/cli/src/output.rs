//! Deterministic output writing: CSV with 17 significant digits, pretty
//! JSON, and a manifest listing every file with its SHA-256.

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: &'a str,
    schema_version: u32,
    seed: u64,
    versions: Versions,
    wall_clock_s: f64,
    outputs: &'a [FileEntry],
}

#[derive(Serialize)]
struct Versions {
    ring_cqed: &'static str,
    ring_cqed_cli: &'static str,
}

pub struct Output {
    dir: PathBuf,
    files: Vec<FileEntry>,
    command: String,
    config_hash: String,
    seed: u64,
    started: Instant,
}

impl Output {
    pub fn new(dir: &Path, command: &str, seed: u64) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            command: command.into(),
            config_hash: String::new(),
            seed,
            started: Instant::now(),
        })
    }

    /// Records the hash of the canonical input description.
    pub fn set_config(&mut self, canonical: &str) {
        self.config_hash = sha256_hex(canonical.as_bytes());
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(FileEntry {
            path: name.into(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Columns of equal length under `header`.
    pub fn write_columns(&mut self, name: &str, header: &[String], cols: &[Vec<f64>]) -> Result<()> {
        let n = cols.first().map_or(0, |c| c.len());
        anyhow::ensure!(cols.iter().all(|c| c.len() == n), "ragged columns for {name}");
        let mut s = header.join(",");
        s.push('\n');
        for i in 0..n {
            let row: Vec<String> = cols.iter().map(|c| fmt_num(c[i])).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        self.write_bytes(name, s.as_bytes())
    }

    /// Rows with leading text fields followed by numbers.
    pub fn write_rows(&mut self, name: &str, header: &[&str], rows: &[(Vec<String>, Vec<f64>)]) -> Result<()> {
        let mut s = header.join(",");
        s.push('\n');
        for (text, nums) in rows {
            let mut fields = text.clone();
            fields.extend(nums.iter().map(|v| fmt_num(*v)));
            let _ = writeln!(s, "{}", fields.join(","));
        }
        self.write_bytes(name, s.as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write_bytes(name, s.as_bytes())
    }

    pub fn finish(self) -> Result<PathBuf> {
        let m = Manifest {
            command: &self.command,
            config_hash: &self.config_hash,
            schema_version: ring_cqed::config::SCHEMA_VERSION,
            seed: self.seed,
            versions: Versions {
                ring_cqed: ring_cqed::VERSION,
                ring_cqed_cli: env!("CARGO_PKG_VERSION"),
            },
            wall_clock_s: self.started.elapsed().as_secs_f64(),
            outputs: &self.files,
        };
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&m)? + "\n")?;
        Ok(path)
    }
}
