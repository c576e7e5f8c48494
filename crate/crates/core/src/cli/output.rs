use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::Result;

/// `meta.json`: what produced the files in a run directory.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    pub timestamp_unix: u64,
    pub wall_time_seconds: f64,
    pub files: Vec<String>,
}

/// A fresh output directory that records every file written into it.
#[derive(Debug)]
pub struct RunDir {
    path: PathBuf,
    files: Vec<String>,
    started: Instant,
    timestamp: u64,
}

impl RunDir {
    /// Creates `<root>/<label>-<unix seconds>`, adding `-2`, `-3`, ... on
    /// collision.
    pub fn create(root: &Path, label: &str) -> Result<Self> {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        fs::create_dir_all(root)?;
        let base = format!("{label}-{timestamp}");
        let mut path = root.join(&base);
        let mut k = 2;
        loop {
            match fs::create_dir(&path) {
                Ok(()) => break,
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    path = root.join(format!("{base}-{k}"));
                    k += 1;
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(RunDir { path, files: Vec::new(), started: Instant::now(), timestamp })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let mut w = BufWriter::new(File::create(self.path.join(name))?);
        f(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        self.write(name, |w| Ok(w.write_all(text.as_bytes())?))
    }

    /// Writes `meta.json` and returns the directory and data file paths.
    pub fn finish(self, command: &str, config: BTreeMap<String, String>, seed: u64) -> Result<(PathBuf, Vec<PathBuf>)> {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            seed,
            timestamp_unix: self.timestamp,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            files: self.files.clone(),
        };
        let file = BufWriter::new(File::create(self.path.join("meta.json"))?);
        serde_json::to_writer_pretty(file, &manifest)?;
        let files = self.files.iter().map(|f| self.path.join(f)).collect();
        Ok((self.path, files))
    }
}
