//! File helpers that attach paths to errors.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

pub fn read_to_string(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(open(path)?).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| CliError::invalid(format!("{} line {}: {e}", path.display(), i + 1)))?;
        out.push(item);
    }
    Ok(out)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_to_string(path)?)
        .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

/// Line-delimited JSON output file.
pub struct JsonlWriter {
    path: PathBuf,
    out: BufWriter<File>,
    pub lines: u64,
}

impl JsonlWriter {
    pub fn create(path: PathBuf) -> CliResult<Self> {
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(JsonlWriter {
            out: BufWriter::new(file),
            path,
            lines: 0,
        })
    }

    pub fn write<T: Serialize>(&mut self, item: &T) -> CliResult<()> {
        serde_json::to_writer(&mut self.out, item).map_err(|e| CliError::invalid(e.to_string()))?;
        self.out.write_all(b"\n").map_err(|e| CliError::io(&self.path, e))?;
        self.lines += 1;
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<PathBuf> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))?;
        Ok(self.path)
    }
}

pub fn write_jsonl<T: Serialize>(path: PathBuf, items: impl IntoIterator<Item = T>) -> CliResult<PathBuf> {
    let mut w = JsonlWriter::create(path)?;
    for item in items {
        w.write(&item)?;
    }
    w.finish()
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::invalid(e.to_string()))?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}
