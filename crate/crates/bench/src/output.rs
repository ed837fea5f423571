//! CSV series, partial-result logs and the JSON run manifest.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

/// Bumped whenever a column is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub rows: usize,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub schema_version: u32,
    pub versions: Versions,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub threads: usize,
    pub config: serde_json::Value,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputFile>,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub lowdeg_bench: &'static str,
    pub lowdeg_tomo: &'static str,
}

impl Versions {
    pub fn current() -> Self {
        Versions {
            lowdeg_bench: env!("CARGO_PKG_VERSION"),
            lowdeg_tomo: lowdeg_tomo::VERSION,
        }
    }
}

/// Tracks one command: wall time and the files it wrote.
pub struct Run {
    pub dir: PathBuf,
    command: String,
    start: Instant,
    outputs: Vec<OutputFile>,
}

impl Run {
    pub fn start(dir: &Path, command: impl Into<String>) -> Result<Run> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Run {
            dir: dir.to_path_buf(),
            command: command.into(),
            start: Instant::now(),
            outputs: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn record(&mut self, name: &str, rows: usize) {
        self.outputs.push(OutputFile {
            path: name.to_string(),
            rows,
        });
    }

    /// Writes `rows` to `name` and records it.
    pub fn write_csv<S: Serialize>(&mut self, name: &str, rows: &[S]) -> Result<()> {
        write_csv(&self.path(name), rows)?;
        self.record(name, rows.len());
        Ok(())
    }

    pub fn outputs(&self) -> &[OutputFile] {
        &self.outputs
    }

    /// Writes `manifest.json` and returns its path.
    pub fn finish<C: Serialize>(self, config: &C, seed: Option<u64>) -> Result<PathBuf> {
        let manifest = Manifest {
            command: self.command,
            schema_version: SCHEMA_VERSION,
            versions: Versions::current(),
            seed,
            threads: rayon::current_num_threads(),
            config: serde_json::to_value(config)?,
            wall_time_s: self.start.elapsed().as_secs_f64(),
            outputs: self.outputs,
        };
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)?)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows appended and flushed as runs complete, so an interrupted run keeps
/// what it finished. Removed by [`PartialLog::close`].
pub struct PartialLog {
    path: PathBuf,
    writer: Mutex<csv::Writer<File>>,
}

impl PartialLog {
    pub fn create(path: PathBuf) -> Result<PartialLog> {
        let writer =
            csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        Ok(PartialLog {
            path,
            writer: Mutex::new(writer),
        })
    }

    pub fn append<S: Serialize>(&self, row: &S) -> Result<()> {
        let mut w = self.writer.lock().expect("partial log");
        w.serialize(row)?;
        w.flush()?;
        Ok(())
    }

    pub fn close(self) -> Result<()> {
        drop(self.writer);
        fs::remove_file(&self.path)?;
        Ok(())
    }
}
