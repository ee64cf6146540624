//! `curator`: scan, gate, classify and release licensed training data.

mod commands;
mod config;
mod context;
mod error;
mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{gate, pd, release, scan};
use crate::config::{parse_override, Override};
use crate::context::{Ctx, ReportDir};
use crate::error::CliResult;
use crate::report::RunReport;

#[derive(Debug, Parser)]
#[command(name = "curator", version, about = "Provenance-tracked curation of training data")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Configuration override, e.g. `pd.matching.threshold=0.9`. Repeatable;
    /// applied after the file and command flags.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", value_parser = parse_override)]
    sets: Vec<Override>,
    /// Release store directory.
    #[arg(long, global = true, env = "CURATOR_STORE", value_name = "DIR")]
    store: Option<PathBuf>,
    /// Where to write the run report.
    #[arg(long, global = true, value_name = "PATH")]
    run_report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scan WARC files for license markers.
    Scan(scan::ScanArgs),
    /// Apply robots.txt snapshots and opt-out lists.
    Gate(gate::GateArgs),
    /// Public-domain determination from copyright records.
    #[command(subcommand)]
    Pd(pd::PdCommand),
    /// Seal a release in the store.
    Assemble(release::AssembleArgs),
    /// Remove a document from all future releases.
    Remove(release::RemoveArgs),
    /// Whether a document is in a release.
    Lookup(release::LookupArgs),
    /// Render the datasheet of a release.
    Datasheet(release::DocArgs),
    /// Emit machine-readable metadata of a release.
    Metadata(release::DocArgs),
    /// Check the integrity of the store.
    Audit(release::AuditArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Scan(_) => "scan",
            Command::Gate(_) => "gate",
            Command::Pd(pd::PdCommand::Match(_)) => "pd match",
            Command::Pd(pd::PdCommand::Classify(_)) => "pd classify",
            Command::Pd(pd::PdCommand::Estimate(_)) => "pd estimate",
            Command::Pd(pd::PdCommand::EvaluateExtractor(_)) => "pd evaluate-extractor",
            Command::Assemble(_) => "assemble",
            Command::Remove(_) => "remove",
            Command::Lookup(_) => "lookup",
            Command::Datasheet(_) => "datasheet",
            Command::Metadata(_) => "metadata",
            Command::Audit(_) => "audit",
        }
    }
}

fn dispatch(command: &Command, ctx: &mut Ctx) -> CliResult<()> {
    match command {
        Command::Scan(a) => scan::run(a, ctx),
        Command::Gate(a) => gate::run(a, ctx),
        Command::Pd(c) => pd::run(c, ctx),
        Command::Assemble(a) => release::assemble(a, ctx),
        Command::Remove(a) => release::remove(a, ctx),
        Command::Lookup(a) => release::lookup(a, ctx),
        Command::Datasheet(a) => release::datasheet(a, ctx),
        Command::Metadata(a) => release::metadata(a, ctx),
        Command::Audit(a) => release::audit(a, ctx),
    }
}

fn report_path(explicit: Option<PathBuf>, ctx: &Ctx) -> PathBuf {
    if let Some(path) = explicit {
        return path;
    }
    match &ctx.report_dir {
        Some(ReportDir::Output(dir)) => dir.join("run-report.json"),
        Some(ReportDir::Runs(dir)) => dir.join(ctx.report.file_name()),
        None => std::env::temp_dir().join("curator-runs").join(ctx.report.file_name()),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let mut ctx = Ctx {
        config_file: cli.config,
        sets: cli.sets,
        store: cli.store,
        report: RunReport::new(cli.command.name(), argv),
        report_dir: None,
    };
    let result = dispatch(&cli.command, &mut ctx);
    ctx.report.finish(&result);
    let path = report_path(cli.run_report, &ctx);
    match ctx.report.write(&path) {
        Ok(()) => eprintln!("run report: {}", path.display()),
        Err(e) => eprintln!("warning: run report not written: {e}"),
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
