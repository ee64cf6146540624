//! Store commands: assemble, remove, lookup, datasheet, metadata, audit.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::{ArgGroup, Args};
use curator_core::preference::{Decision, PreferenceSignal, SignalKind, SignalLog, Subject};
use curator_core::provenance::DocumentRecord;
use curator_core::release::{
    assemble_release, audit_store, carry_forward, datasheet_for, membership_lookup, metadata_for, remove_document,
    AssembleRequest, MembershipQuery, RemovalReason, Store,
};
use curator_core::scanner::SourceSnapshot;
use serde::Serialize;

use crate::config::Override;
use crate::context::Ctx;
use crate::error::{CliError, CliResult};
use crate::io::{open, read_json, read_jsonl, read_to_string, write_bytes};

#[derive(Debug, Args)]
pub struct AssembleArgs {
    /// Release label, e.g. `v1`.
    #[arg(long, value_name = "LABEL")]
    pub label: String,
    /// Documents JSONL, as written by `scan` or `gate`. Repeatable.
    #[arg(long = "documents", value_name = "PATH")]
    pub documents: Vec<PathBuf>,
    /// Source snapshots JSONL, as written by `scan`. Repeatable.
    #[arg(long = "sources", value_name = "PATH")]
    pub sources: Vec<PathBuf>,
    /// Preference signals JSONL, as written by `gate`. Repeatable.
    #[arg(long = "signals", value_name = "PATH")]
    pub signals: Vec<PathBuf>,
    /// Carry forward the non-removed documents of this release and make it
    /// the parent.
    #[arg(long, value_name = "RELEASE", conflicts_with = "parent")]
    pub from_release: Option<String>,
    /// Parent release, without carrying its documents forward.
    #[arg(long, value_name = "RELEASE")]
    pub parent: Option<String>,
    /// Release timestamp (RFC 3339); defaults to the latest crawl date.
    #[arg(long, value_name = "TIME")]
    pub created_at: Option<DateTime<Utc>>,
    /// Scan report whose counts are recorded in the manifest.
    #[arg(long, value_name = "PATH")]
    pub scan_report: Option<PathBuf>,
    /// Gate report whose counts are recorded in the manifest.
    #[arg(long, value_name = "PATH")]
    pub gate_report: Option<PathBuf>,
    /// Dataset name.
    #[arg(long, value_name = "NAME")]
    pub dataset_name: Option<String>,
    /// License of the dataset as a whole.
    #[arg(long, value_name = "LICENSE")]
    pub dataset_license: Option<String>,
    /// Whether the dataset is freely downloadable.
    #[arg(long, value_name = "BOOL")]
    pub open_access: Option<bool>,
    /// Whether the collection pipeline is published.
    #[arg(long, value_name = "BOOL")]
    pub replicable: Option<bool>,
    /// Contact for removal requests.
    #[arg(long, value_name = "CONTACT")]
    pub removal_contact: Option<String>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("target").required(true).args(["doc_id", "url", "text_file"])))]
pub struct RemoveArgs {
    /// Document id to remove.
    #[arg(long, value_name = "ID")]
    pub doc_id: Option<String>,
    /// Remove every stored document crawled from this URL.
    #[arg(long, value_name = "URL")]
    pub url: Option<String>,
    /// Remove the document whose text is the content of this file.
    #[arg(long, value_name = "PATH")]
    pub text_file: Option<PathBuf>,
    /// optout, license-dispute, sensitive-content or other.
    #[arg(long, value_name = "REASON")]
    pub reason: RemovalReason,
    /// Reference of the removal request, e.g. a ticket number.
    #[arg(long, value_name = "REF")]
    pub request_ref: String,
    /// Time of the request (RFC 3339); defaults to now.
    #[arg(long, value_name = "TIME")]
    pub at: Option<DateTime<Utc>>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("query").required(true).args(["doc_id", "url", "text_file"])))]
pub struct LookupArgs {
    /// Release id or label.
    #[arg(long, value_name = "RELEASE")]
    pub release: String,
    /// Document id.
    #[arg(long, value_name = "ID")]
    pub doc_id: Option<String>,
    /// Source URL of the document.
    #[arg(long, value_name = "URL")]
    pub url: Option<String>,
    /// File holding the exact document text.
    #[arg(long, value_name = "PATH")]
    pub text_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DocArgs {
    /// Release id or label.
    #[arg(long, value_name = "RELEASE")]
    pub release: String,
    /// Write to this file instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Audit one release instead of the whole store.
    #[arg(long, value_name = "RELEASE")]
    pub release: Option<String>,
}

fn release_flags(args: &AssembleArgs) -> Vec<Override> {
    let mut flags = Vec::new();
    if let Some(v) = &args.dataset_name {
        flags.push(Override::new("release.dataset_name", v.as_str()));
    }
    if let Some(v) = &args.dataset_license {
        flags.push(Override::new("release.dataset_license", v.as_str()));
    }
    if let Some(v) = args.open_access {
        flags.push(Override::new("release.open_access", v));
    }
    if let Some(v) = args.replicable {
        flags.push(Override::new("release.replicable", v));
    }
    if let Some(v) = &args.removal_contact {
        flags.push(Override::new("release.removal_contact", v.as_str()));
    }
    flags
}

/// Integer leaves of a report, keyed `prefix.path.to.leaf`.
fn flatten_counts(prefix: &str, value: &serde_json::Value, out: &mut BTreeMap<String, u64>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                flatten_counts(&format!("{prefix}.{k}"), v, out);
            }
        }
        serde_json::Value::Number(n) => {
            if let Some(n) = n.as_u64() {
                out.insert(prefix.to_string(), n);
            }
        }
        _ => {}
    }
}

fn pipeline_counts(args: &AssembleArgs, ctx: &mut Ctx) -> CliResult<BTreeMap<String, u64>> {
    let mut counts = BTreeMap::new();
    if let Some(path) = &args.scan_report {
        ctx.report.input(path)?;
        let report: serde_json::Value = read_json(path)?;
        let totals = report
            .get("totals")
            .ok_or_else(|| CliError::invalid(format!("{}: not a scan report", path.display())))?;
        flatten_counts("scan", totals, &mut counts);
    }
    if let Some(path) = &args.gate_report {
        ctx.report.input(path)?;
        let report: serde_json::Value = read_json(path)?;
        flatten_counts("gate", &report, &mut counts);
    }
    Ok(counts)
}

#[derive(Debug, Serialize)]
struct AssembleSummary {
    release_id: String,
    label: String,
    parent: Option<String>,
    documents: usize,
    documents_added: usize,
    documents_already_stored: usize,
    carried_forward: usize,
    tombstones_applied: usize,
    signals_appended: usize,
    config_hash: String,
}

pub fn assemble(args: &AssembleArgs, ctx: &mut Ctx) -> CliResult<()> {
    let config = ctx.config(release_flags(args))?;
    let store = ctx.open_or_init_store()?;
    let counts = pipeline_counts(args, ctx)?;

    let mut docs: Vec<DocumentRecord> = Vec::new();
    for path in &args.documents {
        ctx.report.input(path)?;
        docs.extend(read_jsonl::<DocumentRecord>(path)?);
    }
    if let Some(bad) = docs.iter().find(|d| !d.verify_id()) {
        return Err(CliError::invalid(format!("document {} does not match its text", bad.doc_id)));
    }
    let mut sources: BTreeMap<String, SourceSnapshot> = BTreeMap::new();
    for path in &args.sources {
        ctx.report.input(path)?;
        for s in read_jsonl::<SourceSnapshot>(path)? {
            sources.insert(s.digest.clone(), s);
        }
    }
    let mut log = SignalLog::new();
    for path in &args.signals {
        ctx.report.input(path)?;
        log.merge(SignalLog::read_jsonl(BufReader::new(open(path)?))?);
    }
    for d in &docs {
        for s in &d.signals {
            log.append(s.clone());
        }
    }

    let parent_ref = args.from_release.as_ref().or(args.parent.as_ref());
    let parent = parent_ref.map(|r| store.release(r)).transpose()?;
    let mut ids: BTreeSet<String> = docs.iter().map(|d| d.doc_id.clone()).collect();
    let mut carried = 0;
    if let (Some(p), Some(_)) = (&parent, &args.from_release) {
        let (kept, _) = carry_forward(&store, p)?;
        carried = kept.len();
        ids.extend(kept);
    }
    let created_at = args
        .created_at
        .or_else(|| docs.iter().map(|d| d.provenance.crawl_date).max())
        .or_else(|| parent.as_ref().map(|p| p.created_at))
        .ok_or_else(|| CliError::invalid("no documents: pass --documents or --from-release"))?;

    let pairs: Vec<(DocumentRecord, Option<SourceSnapshot>)> = docs
        .into_iter()
        .map(|d| {
            let source = d.licenses.first().and_then(|l| sources.get(&l.evidence().input_digest).cloned());
            (d, source)
        })
        .collect();
    let writer = store.writer()?;
    let signals_appended = writer.append_signals(&log)?;
    let put = writer.put_documents(pairs)?;
    let manifest = assemble_release(
        &writer,
        AssembleRequest {
            doc_ids: ids.into_iter().collect(),
            parent: parent.as_ref().map(|p| p.release_id.clone()),
            label: args.label.clone(),
            created_at,
            config: &config,
            pipeline_counts: counts,
        },
    )?;
    drop(writer);
    let summary = AssembleSummary {
        release_id: manifest.release_id.clone(),
        label: manifest.label.clone(),
        parent: manifest.parent.clone(),
        documents: manifest.doc_ids.len(),
        documents_added: put.added,
        documents_already_stored: put.already_present,
        carried_forward: carried,
        tombstones_applied: manifest.tombstones_applied.len(),
        signals_appended,
        config_hash: manifest.config_hash.clone(),
    };
    ctx.report.output(store.path(&format!("manifests/{}.json", manifest.release_id)));
    ctx.report.counters("assemble", &summary);
    println!("{}", serde_json::to_string_pretty(&summary).map_err(|e| CliError::invalid(e.to_string()))?);
    Ok(())
}

fn doc_ids_for(store: &Store, args: &RemoveArgs, ctx: &mut Ctx) -> CliResult<Vec<String>> {
    if let Some(id) = &args.doc_id {
        return Ok(vec![id.trim().to_ascii_lowercase()]);
    }
    if let Some(url) = &args.url {
        let ids: Vec<String> = store.url_index()?.remove(url).unwrap_or_default().into_iter().collect();
        if ids.is_empty() {
            return Err(curator_core::Error::NotFound(format!("no stored document from {url}")).into());
        }
        return Ok(ids);
    }
    let path = args.text_file.as_deref().expect("one target is required");
    ctx.report.input(path)?;
    Ok(vec![curator_core::hash::doc_id_for_text(&read_to_string(path)?)])
}

pub fn remove(args: &RemoveArgs, ctx: &mut Ctx) -> CliResult<()> {
    ctx.config(Vec::new())?;
    let store = ctx.open_store()?;
    let at = args.at.unwrap_or_else(Utc::now);
    let ids = doc_ids_for(&store, args, ctx)?;
    let documents = store.documents()?;
    let writer = store.writer()?;
    let mut tombstones = Vec::new();
    for id in ids {
        let url = documents.get(&id).map(|d| d.source_url.clone()).unwrap_or_default();
        let signal = PreferenceSignal {
            subject: Subject::document(&url, &id),
            kind: SignalKind::ManualRemovalRequest,
            source: args.request_ref.clone(),
            observed_at: at,
            decision: Decision::Exclude,
            purpose: None,
            matched: None,
        };
        writer.append_signals(&std::iter::once(signal.clone()).collect::<SignalLog>())?;
        tombstones.push(remove_document(&writer, &id, args.reason, &signal.id(), at)?);
    }
    drop(writer);
    ctx.report.counters("removed", &tombstones);
    println!("{}", serde_json::to_string_pretty(&tombstones).map_err(|e| CliError::invalid(e.to_string()))?);
    Ok(())
}

pub fn lookup(args: &LookupArgs, ctx: &mut Ctx) -> CliResult<()> {
    let store = ctx.open_store()?;
    let query = if let Some(id) = &args.doc_id {
        MembershipQuery::DocId(id.clone())
    } else if let Some(url) = &args.url {
        MembershipQuery::Url(url.clone())
    } else {
        let path = args.text_file.as_deref().expect("one query is required");
        ctx.report.input(path)?;
        MembershipQuery::Text(read_to_string(path)?)
    };
    let answer = membership_lookup(&store, &query, &args.release)?;
    ctx.report.counters("membership", &answer);
    println!("{}", serde_json::to_string_pretty(&answer).map_err(|e| CliError::invalid(e.to_string()))?);
    Ok(())
}

fn emit_bytes(bytes: &[u8], out: Option<&Path>, ctx: &mut Ctx) -> CliResult<()> {
    match out {
        Some(path) => {
            write_bytes(path, bytes)?;
            ctx.report.output(path);
        }
        None => print!("{}", String::from_utf8_lossy(bytes)),
    }
    Ok(())
}

pub fn datasheet(args: &DocArgs, ctx: &mut Ctx) -> CliResult<()> {
    let store = ctx.open_store()?;
    let manifest = store.release(&args.release)?;
    let text = datasheet_for(&store, &manifest)?;
    emit_bytes(text.as_bytes(), args.out.as_deref(), ctx)
}

pub fn metadata(args: &DocArgs, ctx: &mut Ctx) -> CliResult<()> {
    let store = ctx.open_store()?;
    let manifest = store.release(&args.release)?;
    let meta = metadata_for(&store, &manifest)?;
    emit_bytes(&meta.to_bytes(), args.out.as_deref(), ctx)
}

pub fn audit(args: &AuditArgs, ctx: &mut Ctx) -> CliResult<()> {
    let store = ctx.open_store()?;
    let report = audit_store(&store, args.release.as_deref())?;
    ctx.report.counters("audit", &report);
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| CliError::invalid(e.to_string()))?);
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Findings(format!("{} audit violations", report.violations.len())))
    }
}
