//! `curator pd`: public-domain determination from copyright records.

use std::collections::BTreeMap;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use curator_core::config::PipelineConfig;
use curator_core::pd::{
    classify_corpus, estimate_misclassification, evaluate_extractor, ingest_registrations, ingest_renewals,
    match_renewals, read_decisions, triage_entries, ClassifyRules, FieldAccuracyProfile, IngestReport, MatchConfig,
    MatchResult, MisclassificationEstimate, NormalizedRegistration, NormalizedRenewal, OutcomeCounts, PartialDate,
};
use serde::Serialize;

use crate::config::Override;
use crate::context::Ctx;
use crate::error::{CliError, CliResult};
use crate::io::{open, read_json, write_json, write_jsonl};

#[derive(Debug, Subcommand)]
pub enum PdCommand {
    /// Match registrations against renewals.
    Match(MatchArgs),
    /// Match, then classify every registration.
    Classify(ClassifyArgs),
    /// Expected number of works wrongly classified public domain.
    Estimate(EstimateArgs),
    /// Field accuracies of extracted records against ground truth.
    EvaluateExtractor(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct RecordInputs {
    /// Registrations, CSV or JSONL (`.jsonl`/`.ndjson`), with columns
    /// reg_id, title, author, pub_year.
    #[arg(long, value_name = "PATH")]
    pub registrations: PathBuf,
    /// Renewals, CSV or JSONL, with columns renewal_id, title, author,
    /// renewal_date and optionally original_reg_id, original_pub_date.
    #[arg(long, value_name = "PATH")]
    pub renewals: PathBuf,
    /// Minimum title similarity for a fuzzy candidate.
    #[arg(long, value_name = "X")]
    pub threshold: Option<f64>,
    /// Width of the ambiguity band above the threshold.
    #[arg(long, value_name = "X")]
    pub ambiguity_band: Option<f64>,
    /// Accepted renewal gap in years, `LOW:HIGH`.
    #[arg(long, value_name = "LOW:HIGH", value_parser = parse_range)]
    pub window: Option<(i32, i32)>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[command(flatten)]
    pub inputs: RecordInputs,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub inputs: RecordInputs,
    /// Manual triage decisions, JSONL.
    #[arg(long, value_name = "PATH")]
    pub decisions: Option<PathBuf>,
    /// Latest publication year that is public domain by age.
    #[arg(long, value_name = "YEAR")]
    pub cutoff_year: Option<i32>,
    /// Publication years where an unrenewed registration lapsed,
    /// `FIRST:LAST`.
    #[arg(long, value_name = "FIRST:LAST", value_parser = parse_range)]
    pub rule_years: Option<(i32, i32)>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Title extraction accuracy.
    #[arg(long, value_name = "X", required_unless_present = "profile")]
    pub a_title: Option<f64>,
    /// Registration-number extraction accuracy.
    #[arg(long, value_name = "X", required_unless_present = "profile")]
    pub a_reg: Option<f64>,
    /// Author extraction accuracy (reported, not used in the probability).
    #[arg(long, value_name = "X")]
    pub a_author: Option<f64>,
    /// Date extraction accuracy (reported, not used in the probability).
    #[arg(long, value_name = "X")]
    pub a_date: Option<f64>,
    /// Number of works.
    #[arg(long = "n", value_name = "N", required_unless_present = "profile")]
    pub n_works: Option<u64>,
    /// Field accuracy profile JSON, as written by `evaluate-extractor`.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["a_title", "a_reg", "n_works"])]
    pub profile: Option<PathBuf>,
    /// Also write the report to this file.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Extracted registrations (CSV or JSONL) with a work_key column.
    #[arg(long, value_name = "PATH")]
    pub extracted: PathBuf,
    /// Ground-truth registrations with the same work keys.
    #[arg(long, value_name = "PATH")]
    pub ground_truth: PathBuf,
    /// Also write the report to this file.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<(i32, i32), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected LOW:HIGH, got `{s}`"))?;
    let a: i32 = a.trim().parse().map_err(|_| format!("`{a}` is not a year count"))?;
    let b: i32 = b.trim().parse().map_err(|_| format!("`{b}` is not a year count"))?;
    if a > b {
        return Err(format!("{a} is greater than {b}"));
    }
    Ok((a, b))
}

pub fn run(cmd: &PdCommand, ctx: &mut Ctx) -> CliResult<()> {
    match cmd {
        PdCommand::Match(a) => run_match(a, ctx),
        PdCommand::Classify(a) => run_classify(a, ctx),
        PdCommand::Estimate(a) => run_estimate(a, ctx),
        PdCommand::EvaluateExtractor(a) => run_evaluate(a, ctx),
    }
}

fn matching_flags(inputs: &RecordInputs) -> Vec<Override> {
    let mut flags = Vec::new();
    if let Some(t) = inputs.threshold {
        flags.push(Override::new("pd.matching.threshold", t));
    }
    if let Some(b) = inputs.ambiguity_band {
        flags.push(Override::new("pd.matching.ambiguity_band", b));
    }
    if let Some((lo, hi)) = inputs.window {
        flags.push(Override::new(
            "pd.matching.renewal_window_years",
            toml::Value::Array(vec![i64::from(lo).into(), i64::from(hi).into()]),
        ));
    }
    flags
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    path: PathBuf,
    rows_read: usize,
    records: usize,
    rejected: usize,
}

impl From<&IngestReport> for IngestSummary {
    fn from(r: &IngestReport) -> Self {
        IngestSummary {
            path: r.path.clone(),
            rows_read: r.rows_read,
            records: r.records,
            rejected: r.rejected.len(),
        }
    }
}

struct Loaded {
    registrations: Vec<NormalizedRegistration>,
    renewals: Vec<NormalizedRenewal>,
    ingest: BTreeMap<&'static str, IngestSummary>,
}

fn load_records(inputs: &RecordInputs, ctx: &mut Ctx) -> CliResult<Loaded> {
    ctx.report.input(&inputs.registrations)?;
    ctx.report.input(&inputs.renewals)?;
    let (registrations, reg_report) = ingest_registrations(&inputs.registrations)?;
    let (renewals, ren_report) = ingest_renewals(&inputs.renewals)?;
    let mut ingest = BTreeMap::new();
    for (name, report) in [("registrations", &reg_report), ("renewals", &ren_report)] {
        if !report.rejected.is_empty() {
            let path = inputs.out.join(format!("rejected-{name}.jsonl"));
            report.write_rejects(&path)?;
            ctx.report.output(path);
            eprintln!("{}: {} rows rejected", report.path.display(), report.rejected.len());
        }
        ingest.insert(name, IngestSummary::from(report));
    }
    Ok(Loaded {
        registrations,
        renewals,
        ingest,
    })
}

#[derive(Debug, Serialize)]
struct MatchLine<'a> {
    registration_key: &'a str,
    reg_id: &'a str,
    title: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub_date: Option<PartialDate>,
    matches: &'a [MatchResult],
}

#[derive(Debug, Default, Serialize)]
struct MatchCounts {
    registrations: usize,
    with_candidates: usize,
    candidates: usize,
    confirmed: usize,
    ambiguous: usize,
    by_stage: BTreeMap<String, usize>,
}

#[derive(Debug, Serialize)]
struct MatchReport<'a> {
    config: &'a MatchConfig,
    ingest: &'a BTreeMap<&'static str, IngestSummary>,
    counts: MatchCounts,
}

fn count_matches(all: &[Vec<MatchResult>]) -> MatchCounts {
    let mut c = MatchCounts {
        registrations: all.len(),
        ..MatchCounts::default()
    };
    for matches in all {
        if !matches.is_empty() {
            c.with_candidates += 1;
        }
        for m in matches {
            c.candidates += 1;
            match m.status {
                curator_core::pd::MatchStatus::Confirmed => c.confirmed += 1,
                curator_core::pd::MatchStatus::Ambiguous => c.ambiguous += 1,
            }
            let stage = serde_json::to_value(m.stage).ok().and_then(|v| v.as_str().map(str::to_string));
            *c.by_stage.entry(stage.unwrap_or_default()).or_default() += 1;
        }
    }
    c
}

fn sorted(mut registrations: Vec<NormalizedRegistration>) -> Vec<NormalizedRegistration> {
    registrations.sort_by(|a, b| (&a.reg_id_norm, &a.title_norm, &a.key).cmp(&(&b.reg_id_norm, &b.title_norm, &b.key)));
    registrations
}

fn run_match(args: &MatchArgs, ctx: &mut Ctx) -> CliResult<()> {
    let config = ctx.config(matching_flags(&args.inputs))?;
    ctx.output_dir(&args.inputs.out)?;
    let loaded = load_records(&args.inputs, ctx)?;
    let registrations = sorted(loaded.registrations);
    let matches = match_renewals(&registrations, loaded.renewals, &config.pd.matching);
    let lines = registrations.iter().zip(&matches).map(|(r, m)| MatchLine {
        registration_key: &r.key,
        reg_id: &r.record.reg_id,
        title: &r.record.title,
        pub_date: r.record.pub_date,
        matches: m,
    });
    ctx.report.output(write_jsonl(args.inputs.out.join("matches.jsonl"), lines)?);
    let report = MatchReport {
        config: &config.pd.matching,
        ingest: &loaded.ingest,
        counts: count_matches(&matches),
    };
    let path = args.inputs.out.join("match-report.json");
    write_json(&path, &report)?;
    ctx.report.output(path);
    ctx.report.counters("match", &report);
    eprintln!(
        "{} registrations, {} with candidates ({} confirmed, {} ambiguous)",
        report.counts.registrations, report.counts.with_candidates, report.counts.confirmed, report.counts.ambiguous
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct ClassifyReport<'a> {
    matching: &'a MatchConfig,
    rules: &'a ClassifyRules,
    ingest: &'a BTreeMap<&'static str, IngestSummary>,
    decisions_applied: usize,
    outcomes: OutcomeCounts,
    by_basis: BTreeMap<&'static str, usize>,
    requires_triage: usize,
}

fn classify_flags(args: &ClassifyArgs) -> Vec<Override> {
    let mut flags = matching_flags(&args.inputs);
    if let Some(y) = args.cutoff_year {
        flags.push(Override::new("pd.rules.pre_cutoff_year", i64::from(y)));
    }
    if let Some((a, b)) = args.rule_years {
        flags.push(Override::new(
            "pd.rules.renewal_rule_years",
            toml::Value::Array(vec![i64::from(a).into(), i64::from(b).into()]),
        ));
    }
    flags
}

fn run_classify(args: &ClassifyArgs, ctx: &mut Ctx) -> CliResult<()> {
    let config = ctx.config(classify_flags(args))?;
    ctx.output_dir(&args.inputs.out)?;
    let decisions = match &args.decisions {
        Some(path) => {
            ctx.report.input(path)?;
            read_decisions(BufReader::new(open(path)?))?
        }
        None => Vec::new(),
    };
    let loaded = load_records(&args.inputs, ctx)?;
    let renewal_records: Vec<_> = loaded.renewals.iter().map(|r| r.record.clone()).collect();
    let works = classify_corpus(
        loaded.registrations,
        loaded.renewals,
        &config.pd.matching,
        &config.pd.rules,
        &decisions,
    );
    let decisions_applied = decisions
        .iter()
        .filter(|d| works.iter().any(|w| w.registration.key == d.registration_key))
        .count();
    let triage = triage_entries(&works, &renewal_records);
    ctx.report.output(write_jsonl(args.inputs.out.join("classifications.jsonl"), &works)?);
    ctx.report.output(write_jsonl(args.inputs.out.join("triage.jsonl"), &triage)?);
    let mut by_basis = BTreeMap::new();
    for w in &works {
        *by_basis.entry(w.classification.basis.as_str()).or_default() += 1;
    }
    let report = ClassifyReport {
        matching: &config.pd.matching,
        rules: &config.pd.rules,
        ingest: &loaded.ingest,
        decisions_applied,
        outcomes: OutcomeCounts::tally(&works),
        by_basis,
        requires_triage: triage.len(),
    };
    let path = args.inputs.out.join("classify-report.json");
    write_json(&path, &report)?;
    ctx.report.output(path);
    ctx.report.counters("classify", &report);
    eprintln!(
        "{} works: {} believed public domain, {} excluded, {} require investigation",
        works.len(),
        report.outcomes.believed_public_domain,
        report.outcomes.excluded,
        report.outcomes.requires_investigation
    );
    Ok(())
}

/// Estimate with the paper-style figures spelled out for readers.
#[derive(Debug, Serialize)]
struct EstimateReport {
    a_title: f64,
    a_reg: f64,
    a_author: Option<f64>,
    a_date: Option<f64>,
    n_works: u64,
    p_exact: f64,
    p_exact_pct: f64,
    expected_wrong_exact: f64,
    p_rounded_pct: f64,
    p_truncated_pct: f64,
    expected_wrong_paper_style: f64,
    paper_style: String,
    summary: String,
}

fn estimate_report(profile: &FieldAccuracyProfile, author: Option<f64>, date: Option<f64>) -> CliResult<EstimateReport> {
    let e: MisclassificationEstimate = estimate_misclassification(profile)?;
    Ok(EstimateReport {
        a_title: profile.a_title,
        a_reg: profile.a_reg,
        a_author: author,
        a_date: date,
        n_works: e.n_works,
        p_exact: e.p_exact,
        p_exact_pct: e.p_exact_pct,
        expected_wrong_exact: e.expected_wrong_exact,
        p_rounded_pct: e.p_rounded_pct,
        p_truncated_pct: e.p_truncated_pct,
        expected_wrong_paper_style: e.expected_wrong_paper_style,
        paper_style: format!("{:.2}%", e.p_truncated_pct),
        summary: format!(
            "P(title and registration number both wrong) = {:.8} ({:.4}%); {:.2}% of {} works is about {:.2} works ({:.2} at full precision)",
            e.p_exact, e.p_exact_pct, e.p_truncated_pct, e.n_works, e.expected_wrong_paper_style, e.expected_wrong_exact
        ),
    })
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>, ctx: &mut Ctx) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::invalid(e.to_string()))?;
    println!("{text}");
    if let Some(path) = out {
        write_json(path, value)?;
        ctx.report.output(path);
        if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            ctx.output_dir(dir)?;
        }
    }
    Ok(())
}

fn run_estimate(args: &EstimateArgs, ctx: &mut Ctx) -> CliResult<()> {
    let _: PipelineConfig = ctx.config(Vec::new())?;
    let (profile, author, date) = match &args.profile {
        Some(path) => {
            ctx.report.input(path)?;
            let mut p: FieldAccuracyProfile = read_json(path)?;
            if let Some(a) = args.a_author {
                p.a_author = a;
            }
            if let Some(d) = args.a_date {
                p.a_date = d;
            }
            (p, Some(p.a_author), Some(p.a_date))
        }
        None => {
            let missing = || CliError::invalid("--a-title, --a-reg and --n are required without --profile");
            let profile = FieldAccuracyProfile {
                a_title: args.a_title.ok_or_else(missing)?,
                a_reg: args.a_reg.ok_or_else(missing)?,
                // Author and date accuracy do not enter the estimate.
                a_author: args.a_author.unwrap_or(1.0),
                a_date: args.a_date.unwrap_or(1.0),
                n_works: args.n_works.ok_or_else(missing)?,
            };
            (profile, args.a_author, args.a_date)
        }
    };
    let report = estimate_report(&profile, author, date)?;
    ctx.report.counters("estimate", &report);
    emit(&report, args.out.as_deref(), ctx)
}

#[derive(Debug, Serialize)]
struct EvaluationReport {
    profile: FieldAccuracyProfile,
    estimate: EstimateReport,
}

fn run_evaluate(args: &EvaluateArgs, ctx: &mut Ctx) -> CliResult<()> {
    let _: PipelineConfig = ctx.config(Vec::new())?;
    ctx.report.input(&args.extracted)?;
    ctx.report.input(&args.ground_truth)?;
    let (extracted, ex_report) = ingest_registrations(&args.extracted)?;
    let (truth, gt_report) = ingest_registrations(&args.ground_truth)?;
    for r in [&ex_report, &gt_report] {
        if let Some(first) = r.rejected.first() {
            return Err(CliError::invalid(format!(
                "{}: {} rows rejected (first: row {}: {})",
                r.path.display(),
                r.rejected.len(),
                first.row,
                first.reason
            )));
        }
    }
    let extracted: Vec<_> = extracted.into_iter().map(|r| r.record).collect();
    let truth: Vec<_> = truth.into_iter().map(|r| r.record).collect();
    let profile = evaluate_extractor(&extracted, &truth)?;
    let report = EvaluationReport {
        profile,
        estimate: estimate_report(&profile, Some(profile.a_author), Some(profile.a_date))?,
    };
    ctx.report.counters("evaluation", &report);
    emit(&report, args.out.as_deref(), ctx)
}
