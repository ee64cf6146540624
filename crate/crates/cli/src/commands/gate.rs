//! `curator gate`: apply robots.txt snapshots and an opt-out list.

use std::io::BufReader;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use clap::Args;
use curator_core::preference::{gate_documents, parse_optout, RobotsSnapshots};
use curator_core::provenance::DocumentRecord;

use crate::config::Override;
use crate::context::Ctx;
use crate::error::{CliError, CliResult};
use crate::io::{open, read_jsonl, read_to_string, write_json, write_jsonl};

#[derive(Debug, Args)]
pub struct GateArgs {
    /// Documents JSONL, as written by `scan`.
    #[arg(long, value_name = "PATH")]
    pub documents: PathBuf,
    /// robots.txt snapshots, one `{origin, fetched_at, text}` JSON object
    /// per line. Repeatable.
    #[arg(long = "robots", value_name = "PATH")]
    pub robots: Vec<PathBuf>,
    /// Opt-out list: one URL, URL prefix ending in `/`, or document hash per
    /// line; `#` starts a comment.
    #[arg(long, value_name = "PATH")]
    pub optout: Option<PathBuf>,
    /// Identifier recorded as the source of opt-out signals. Defaults to the
    /// list's file name.
    #[arg(long, value_name = "ID")]
    pub optout_id: Option<String>,
    /// Product token matched against robots.txt user-agent groups.
    #[arg(long, value_name = "TOKEN")]
    pub agent: Option<String>,
    /// Observation time for opt-out signals. Defaults to the latest crawl
    /// date among the documents.
    #[arg(long, value_name = "RFC3339")]
    pub observed_at: Option<DateTime<Utc>>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

pub fn run(args: &GateArgs, ctx: &mut Ctx) -> CliResult<()> {
    let mut flags = Vec::new();
    if let Some(agent) = &args.agent {
        flags.push(Override::new("gate.user_agent", agent.as_str()));
    }
    let config = ctx.config(flags)?;
    ctx.output_dir(&args.out)?;

    ctx.report.input(&args.documents)?;
    let documents: Vec<DocumentRecord> = read_jsonl(&args.documents)?;
    let mut robots = RobotsSnapshots::default();
    for path in &args.robots {
        ctx.report.input(path)?;
        robots.read_jsonl(BufReader::new(open(path)?))?;
    }
    let optout = match &args.optout {
        Some(path) => {
            ctx.report.input(path)?;
            let id = match &args.optout_id {
                Some(id) => id.clone(),
                None => path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .ok_or_else(|| CliError::invalid("opt-out path has no file name"))?,
            };
            Some(parse_optout(&read_to_string(path)?, &id))
        }
        None => None,
    };
    let observed_at = args
        .observed_at
        .or_else(|| documents.iter().map(|d| d.provenance.crawl_date).max())
        .unwrap_or(DateTime::UNIX_EPOCH);

    let outcome = gate_documents(documents, &robots, optout.as_ref(), &config.gate.user_agent, observed_at);
    ctx.report.output(write_jsonl(args.out.join("documents.jsonl"), &outcome.included)?);
    ctx.report.output(write_jsonl(args.out.join("excluded.jsonl"), &outcome.excluded)?);
    ctx.report.output(write_jsonl(args.out.join("signals.jsonl"), outcome.log.signals())?);
    if let Some(list) = optout.as_ref().filter(|l| !l.rejected.is_empty()) {
        ctx.report.output(write_jsonl(args.out.join("optout-rejected.jsonl"), &list.rejected)?);
        for r in &list.rejected {
            eprintln!("opt-out line {} rejected: {}", r.line, r.reason);
        }
    }
    write_json(&args.out.join("gate-report.json"), &outcome.report)?;
    ctx.report.output(args.out.join("gate-report.json"));
    ctx.report.counters("gate", &outcome.report);
    eprintln!(
        "gated {} documents: {} included, {} excluded by robots.txt, {} by opt-out",
        outcome.report.documents_read,
        outcome.report.included,
        outcome.report.excluded_by_robots,
        outcome.report.excluded_by_optout
    );
    Ok(())
}
