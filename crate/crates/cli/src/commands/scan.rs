//! `curator scan`: WARC files to licensed documents.

use std::collections::BTreeSet;
use std::io::BufReader;
use std::path::PathBuf;

use chrono::Utc;
use clap::Args;
use curator_core::provenance::LicenseTable;
use curator_core::scanner::{scan_warc, Execution, RuleId, ScanContext, ScanError, ScanReport, ScannedDocument};
use serde::Serialize;

use crate::config::Override;
use crate::context::Ctx;
use crate::error::{CliError, CliResult};
use crate::io::{open, write_json, JsonlWriter};

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// WARC file, plain or gzipped. Repeatable; files are scanned in order.
    #[arg(long = "warc", value_name = "PATH", required = true)]
    pub warcs: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Process records one at a time instead of in parallel batches.
    #[arg(long)]
    pub serial: bool,
    /// Records per parallel batch.
    #[arg(long, default_value_t = 256, value_name = "N")]
    pub batch_size: usize,
    /// Emit HTML pages without a license detection.
    #[arg(long)]
    pub keep_undetected: bool,
    /// Emit pages that fail a quality rule, flagged `quality-rejected`.
    #[arg(long)]
    pub keep_quality_rejected: bool,
    /// Replace sensitive spans instead of only flagging them.
    #[arg(long)]
    pub redact: bool,
    /// Quality threshold override, e.g. `min-word-count=80` or
    /// `min-alpha-fraction=off`. Repeatable.
    #[arg(long = "quality", value_name = "RULE=VALUE")]
    pub quality: Vec<String>,
}

#[derive(Debug, Serialize)]
struct FileReport {
    path: PathBuf,
    #[serde(flatten)]
    report: ScanReport,
}

#[derive(Debug, Serialize)]
struct ScanSummary {
    config_hash: String,
    totals: ScanReport,
    files: Vec<FileReport>,
}

fn overrides(args: &ScanArgs) -> CliResult<Vec<Override>> {
    let mut out = Vec::new();
    if args.keep_undetected {
        out.push(Override::new("scan.keep_undetected", true));
    }
    if args.keep_quality_rejected {
        out.push(Override::new("scan.keep_quality_rejected", true));
    }
    if args.redact {
        out.push(Override::new("scan.redact", true));
    }
    for q in &args.quality {
        let (rule, value) = q
            .split_once('=')
            .ok_or_else(|| CliError::invalid(format!("--quality expects RULE=VALUE, got `{q}`")))?;
        let rule = rule.trim();
        if !RuleId::ALL.iter().any(|r| r.as_str() == rule) {
            let known: Vec<&str> = RuleId::ALL.iter().map(|r| r.as_str()).collect();
            return Err(CliError::invalid(format!("unknown quality rule `{rule}`; known: {}", known.join(", "))));
        }
        let value = value.trim();
        let path = format!("scan.quality.{rule}");
        if value == "off" {
            out.push(Override::new(&path, "off"));
        } else {
            let v: f64 = value
                .parse()
                .map_err(|_| CliError::invalid(format!("--quality {rule}: `{value}` is not a number")))?;
            out.push(Override::new(&path, v));
        }
    }
    Ok(out)
}

pub fn run(args: &ScanArgs, ctx: &mut Ctx) -> CliResult<()> {
    if args.batch_size == 0 {
        return Err(CliError::invalid("--batch-size must be at least 1"));
    }
    let config = ctx.config(overrides(args)?)?;
    ctx.output_dir(&args.out)?;
    for w in &args.warcs {
        ctx.report.input(w)?;
    }
    let config_hash = config.hash();
    write_json(&args.out.join("config.json"), &config.hashed())?;
    ctx.report.output(args.out.join("config.json"));

    let scan_ctx = ScanContext {
        config: &config.scan,
        config_hash: config_hash.clone(),
        table: LicenseTable::builtin(),
        ingested_at: Utc::now(),
    };
    let execution = if args.serial {
        Execution::Serial
    } else {
        Execution::Parallel {
            batch_size: args.batch_size,
        }
    };
    let mut documents = JsonlWriter::create(args.out.join("documents.jsonl"))?;
    let mut sources = JsonlWriter::create(args.out.join("sources.jsonl"))?;
    let mut seen_sources: BTreeSet<String> = BTreeSet::new();
    let mut totals = ScanReport::default();
    let mut files = Vec::new();
    let mut stream_errors = Vec::new();

    for path in &args.warcs {
        let input = BufReader::with_capacity(1 << 20, open(path)?);
        let mut write_error: Option<CliError> = None;
        let mut sink = |doc: ScannedDocument| -> curator_core::Result<()> {
            let mut write = || -> CliResult<()> {
                documents.write(&doc.document)?;
                if seen_sources.insert(doc.source.digest.clone()) {
                    sources.write(&doc.source)?;
                }
                Ok(())
            };
            write().map_err(|e| {
                write_error = Some(e);
                curator_core::Error::InvalidState("output write failed".into())
            })
        };
        let result = scan_warc(input, &scan_ctx, execution, &mut sink);
        if let Some(e) = write_error {
            return Err(e);
        }
        let report = match result {
            Ok(r) => r,
            Err(ScanError::Stream { report, detail }) => {
                stream_errors.push(format!("{}: {detail}", path.display()));
                *report
            }
            Err(ScanError::Sink(e)) => return Err(e.into()),
        };
        totals.merge(&report);
        files.push(FileReport {
            path: path.clone(),
            report,
        });
    }
    ctx.report.output(documents.finish()?);
    ctx.report.output(sources.finish()?);
    let summary = ScanSummary {
        config_hash,
        totals,
        files,
    };
    write_json(&args.out.join("scan-report.json"), &summary)?;
    ctx.report.output(args.out.join("scan-report.json"));
    ctx.report.counters("scan", &summary.totals);
    eprintln!(
        "scanned {} records: {} emitted, {} dropped, {} skipped",
        summary.totals.records_read,
        summary.totals.emitted,
        summary.totals.dropped(),
        summary.totals.skipped()
    );
    if !stream_errors.is_empty() {
        return Err(CliError::Findings(format!(
            "input ended inside a record; documents before the break were written: {}",
            stream_errors.join("; ")
        )));
    }
    Ok(())
}
