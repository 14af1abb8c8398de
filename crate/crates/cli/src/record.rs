//! Structured log output and per-command run records.

use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Line-delimited JSON sink. Every line carries a `record` field naming its
/// kind.
pub struct Log {
    out: Mutex<Box<dyn Write + Send>>,
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    record: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

impl Log {
    /// `-` writes to stdout; anything else is appended to.
    pub fn open(path: &Path) -> Result<Self> {
        let out: Box<dyn Write + Send> = if path == Path::new("-") {
            Box::new(io::stdout())
        } else {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .with_context(|| format!("opening log {}", path.display()))?;
            Box::new(BufWriter::new(f))
        };
        Ok(Self { out: Mutex::new(out) })
    }

    pub fn emit<T: Serialize>(&self, record: &str, body: &T) -> Result<()> {
        let line = serde_json::to_string(&Tagged { record, body })?;
        let mut out = self.out.lock().expect("log lock");
        writeln!(out, "{line}")?;
        Ok(())
    }

    pub fn flush(&self) -> Result<()> {
        self.out.lock().expect("log lock").flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InputFile {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    pub inputs: Vec<InputFile>,
    pub outputs: Vec<PathBuf>,
    pub work: u64,
    pub wallclock_seconds: f64,
    pub status: String,
}

/// Collects what a command read and wrote while it runs.
pub struct Run {
    command: String,
    config: serde_json::Value,
    seed: u64,
    started: Instant,
    inputs: Mutex<Vec<InputFile>>,
    outputs: Mutex<Vec<PathBuf>>,
    work: Mutex<u64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl Run {
    pub fn new<C: Serialize>(command: &str, config: &C, seed: u64) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            seed,
            started: Instant::now(),
            inputs: Mutex::default(),
            outputs: Mutex::default(),
            work: Mutex::default(),
        })
    }

    /// Reads an input file and remembers its hash.
    pub fn read(&self, path: &Path) -> Result<String> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::InvalidInput(format!("{}: {e}", path.display())))?;
        self.inputs.lock().expect("lock").push(InputFile {
            path: path.to_path_buf(),
            sha256: sha256_hex(text.as_bytes()),
        });
        Ok(text)
    }

    pub fn write(&self, path: &Path, contents: &[u8]) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.lock().expect("lock").push(path.to_path_buf());
        Ok(())
    }

    pub fn create(&self, path: &Path) -> Result<BufWriter<File>> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        self.outputs.lock().expect("lock").push(path.to_path_buf());
        Ok(BufWriter::new(f))
    }

    pub fn add_work(&self, work: u64) {
        *self.work.lock().expect("lock") += work;
    }

    pub fn finish(self, status: &str) -> RunRecord {
        let mut inputs = self.inputs.into_inner().expect("lock");
        inputs.sort_by(|a, b| a.path.cmp(&b.path));
        let mut outputs = self.outputs.into_inner().expect("lock");
        outputs.sort();
        RunRecord {
            command: self.command,
            config: self.config,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs,
            outputs,
            work: self.work.into_inner().expect("lock"),
            wallclock_seconds: self.started.elapsed().as_secs_f64(),
            status: status.to_string(),
        }
    }
}
