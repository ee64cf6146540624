use std::path::{Path, PathBuf};

use curator_core::config::PipelineConfig;
use curator_core::release::Store;

use crate::config::{load, Override};
use crate::error::{CliError, CliResult};
use crate::report::RunReport;

/// Global options and the report of the current run.
pub struct Ctx {
    pub config_file: Option<PathBuf>,
    pub sets: Vec<Override>,
    pub store: Option<PathBuf>,
    pub report: RunReport,
    /// Where the run report goes when no explicit path was given.
    pub report_dir: Option<ReportDir>,
}

pub enum ReportDir {
    /// `run-report.json` inside a command's output directory.
    Output(PathBuf),
    /// A timestamped file under the store's `runs/` directory.
    Runs(PathBuf),
}

impl Ctx {
    /// Effective configuration: defaults, file, command flags, then `--set`.
    pub fn config(&mut self, flags: Vec<Override>) -> CliResult<PipelineConfig> {
        if let Some(path) = self.config_file.clone() {
            self.report.input(&path)?;
        }
        let mut overrides = flags;
        overrides.extend(self.sets.iter().cloned());
        let config = load(self.config_file.as_deref(), &overrides)?;
        self.report.config_hash = Some(config.hash());
        Ok(config)
    }

    fn store_path(&self) -> CliResult<&Path> {
        self.store
            .as_deref()
            .ok_or_else(|| CliError::invalid("no store given: pass --store or set CURATOR_STORE"))
    }

    pub fn open_store(&mut self) -> CliResult<Store> {
        let store = Store::open(self.store_path()?)?;
        self.report_dir = Some(ReportDir::Runs(store.path("runs")));
        Ok(store)
    }

    /// Opens the store, creating it when the directory does not hold one.
    pub fn open_or_init_store(&mut self) -> CliResult<Store> {
        let path = self.store_path()?.to_path_buf();
        let store = if path.join("state.json").exists() {
            Store::open(&path)?
        } else {
            Store::init(&path)?
        };
        self.report_dir = Some(ReportDir::Runs(store.path("runs")));
        Ok(store)
    }

    pub fn output_dir(&mut self, dir: &Path) -> CliResult<()> {
        crate::io::create_dir(dir)?;
        self.report_dir = Some(ReportDir::Output(dir.to_path_buf()));
        Ok(())
    }
}
