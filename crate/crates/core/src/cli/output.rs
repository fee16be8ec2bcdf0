//! Output directory writer: CSV tables stamped with seed and config digest, plus
//! the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_digest: String,
    pub seed: u64,
    pub replicates: usize,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
}

pub struct OutputDir {
    dir: PathBuf,
    seed: u64,
    digest: String,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path, seed: u64, digest: &str) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            seed,
            digest: digest.to_string(),
            files: Vec::new(),
        })
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.text(name, &s)
    }

    /// Writes a CSV whose leading columns are `schema_version, seed, config_digest`.
    pub fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        let lead = [SCHEMA_VERSION.to_string(), self.seed.to_string(), self.digest.clone()];
        w.write_record(
            ["schema_version", "seed", "config_digest"]
                .iter()
                .map(|s| s.to_string())
                .chain(header.iter().cloned()),
        )?;
        for row in rows {
            w.write_record(lead.iter().chain(row))?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn finish(self, command: &str, replicates: usize, threads: usize, seconds: f64) -> Result<()> {
        let manifest = RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest: self.digest.clone(),
            seed: self.seed,
            replicates,
            threads,
            wall_clock_seconds: seconds,
            outputs: self.files.clone(),
        };
        let mut s = serde_json::to_string_pretty(&manifest)?;
        s.push('\n');
        fs::write(self.dir.join("manifest.json"), s)?;
        Ok(())
    }
}

pub fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

pub fn num(x: f64) -> String {
    x.to_string()
}
