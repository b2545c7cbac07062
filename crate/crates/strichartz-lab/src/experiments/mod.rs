//! Reproducible experiment drivers: configuration, fitting, CSV reports.
//!
//! Every runner takes an [`ExperimentConfig`], writes CSV files with a header
//! line plus a run-manifest text file into the output directory, and returns
//! a typed summary. Identical config and seed produce byte-identical CSVs.

pub mod fit;
pub mod runners;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{LabError, Result};

/// Flat key=value configuration with CLI overrides layered on top.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub dim: usize,
    pub seed: u64,
    pub refine: u8,
    pub out_dir: PathBuf,
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new(experiment: &str, out_dir: PathBuf) -> Self {
        Self {
            experiment: experiment.to_string(),
            dim: 1,
            seed: 7,
            refine: 0,
            out_dir,
            values: BTreeMap::new(),
        }
    }

    /// Parse a `key = value` file (# comments, blank lines allowed).
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                LabError::InvalidParameter(format!(
                    "config line {} is not key=value: {line:?}",
                    lineno + 1
                ))
            })?;
            self.set(k.trim(), v.trim());
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) {
        match key {
            "dim" => {
                if let Ok(d) = value.parse() {
                    self.dim = d;
                }
            }
            "seed" => {
                if let Ok(s) = value.parse() {
                    self.seed = s;
                }
            }
            "refine" => {
                if let Ok(r) = value.parse() {
                    self.refine = r;
                }
            }
            _ => {
                self.values.insert(key.to_string(), value.to_string());
            }
        }
    }

    pub fn get_f64(&self, key: &str, default: f64) -> f64 {
        self.values.get(key).and_then(|v| v.parse().ok()).unwrap_or(default)
    }

    pub fn get_usize(&self, key: &str, default: usize) -> usize {
        self.values.get(key).and_then(|v| v.parse().ok()).unwrap_or(default)
    }

    pub fn get_bool(&self, key: &str, default: bool) -> bool {
        self.values.get(key).and_then(|v| v.parse().ok()).unwrap_or(default)
    }

    /// Sorted `key = value` echo for the manifest.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("experiment = {}\n", self.experiment));
        s.push_str(&format!("dim = {}\n", self.dim));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("refine = {}\n", self.refine));
        for (k, v) in &self.values {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}

/// Write one CSV file: a header line naming the columns, then the rows.
pub fn write_csv(dir: &Path, name: &str, header: &str, rows: &[String]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path)?;
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{row}")?;
    }
    Ok(path)
}

/// Run manifest: config echo, crate version, stage timings.
pub fn write_manifest(dir: &Path, cfg: &ExperimentConfig, timings: &[(String, f64)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut f = std::fs::File::create(dir.join("run_manifest.txt"))?;
    writeln!(f, "strichartz-lab {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(f, "--- config ---")?;
    write!(f, "{}", cfg.echo())?;
    writeln!(f, "--- timings (s) ---")?;
    for (stage, secs) in timings {
        writeln!(f, "{stage}: {secs:.3}")?;
    }
    Ok(())
}

/// Fixed-width float formatting shared by every CSV row (determinism).
pub fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}
