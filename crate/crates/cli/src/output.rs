use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::Result;

/// Record of one invocation; written as `manifest.json` next to its outputs.
#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// Configuration text as run, after command-line overrides.
    pub config: Option<String>,
    pub files: Vec<String>,
    pub durations_ms: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub dry_run: bool,
}

/// Shortest round-trip rendering of a float.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Output directory that tracks every file it writes.
#[derive(Debug)]
pub struct Output {
    dir: PathBuf,
    pub manifest: RunManifest,
    started: Instant,
}

impl Output {
    pub fn new(
        dir: &Path,
        command: &str,
        seed: u64,
        config: Option<String>,
        dry_run: bool,
    ) -> Self {
        Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                seed,
                config,
                dry_run,
                ..RunManifest::default()
            },
            started: Instant::now(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn dry_run(&self) -> bool {
        self.manifest.dry_run
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.manifest.notes.push(text.into());
    }

    /// Runs `f` and records its wall-clock time under `label`.
    pub fn timed<T>(&mut self, label: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f(self)?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        *self
            .manifest
            .durations_ms
            .entry(label.to_string())
            .or_insert(0.0) += ms;
        Ok(out)
    }

    /// Writes a CSV with a header row; a no-op in dry-run mode.
    pub fn csv<I, R>(&mut self, name: &str, header: &[String], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        if self.dry_run() {
            return Ok(());
        }
        fs::create_dir_all(&self.dir)?;
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        self.manifest.files.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.json` and returns the manifest.
    pub fn finish(mut self) -> Result<RunManifest> {
        self.manifest
            .durations_ms
            .insert("total".into(), self.started.elapsed().as_secs_f64() * 1e3);
        if !self.dry_run() {
            fs::create_dir_all(&self.dir)?;
            self.manifest.files.push("manifest.json".into());
            let text = serde_json::to_string_pretty(&self.manifest)?;
            fs::write(self.dir.join("manifest.json"), text + "\n")?;
        }
        Ok(self.manifest)
    }
}

pub fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// `prefix_1, ..., prefix_d`.
pub fn indexed(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}_{i}")).collect()
}
