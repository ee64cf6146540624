//! Per-run report: what was read, with which configuration, what was
//! written, and the counters of each stage. Timestamps live here and only
//! here.

use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::io::{open, write_json};

#[derive(Debug, Clone, Serialize)]
pub struct InputFile {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

pub fn describe_input(path: &Path) -> CliResult<InputFile> {
    let mut file = open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = file.read(&mut buf).map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        bytes += n as u64;
    }
    Ok(InputFile {
        path: path.to_path_buf(),
        bytes,
        sha256: hex::encode(hasher.finalize()),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub started_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub inputs: Vec<InputFile>,
    pub outputs: Vec<PathBuf>,
    pub counters: Map<String, Value>,
}

impl RunReport {
    pub fn new(command: &str, argv: Vec<String>) -> Self {
        RunReport {
            tool: "curator",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            argv,
            started_at: Utc::now(),
            finished_at: None,
            exit_code: 0,
            error: None,
            config_hash: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            counters: Map::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        self.inputs.push(describe_input(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) {
        self.outputs.push(path.into());
    }

    /// Records a module-level report under `name`.
    pub fn counters<T: Serialize>(&mut self, name: &str, value: &T) {
        let value = serde_json::to_value(value).unwrap_or(Value::Null);
        self.counters.insert(name.to_string(), value);
    }

    /// Default file name inside a runs directory.
    pub fn file_name(&self) -> String {
        let stamp = self
            .started_at
            .to_rfc3339_opts(SecondsFormat::Micros, true)
            .replace([':', '.'], "");
        format!("{stamp}-{}.json", self.command.replace(' ', "-"))
    }

    pub fn finish(&mut self, result: &CliResult<()>) {
        self.finished_at = Some(Utc::now());
        if let Err(e) = result {
            self.exit_code = e.exit_code();
            self.error = Some(e.to_string());
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_json(path, self)
    }
}
