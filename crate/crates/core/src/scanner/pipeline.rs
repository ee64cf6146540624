//! WARC-to-document scanning pipeline.

use std::io::Read;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::detect::detect_in_decoded;
use super::html::{decode_html, extract_metadata, extract_text};
use super::http::parse_http_response;
use super::quality::{apply_quality_rules, QualityRules};
use super::sensitive::{redact, screen_sensitive};
use super::warc::{open_warc, WarcItem, WarcRecord, WarcStreamError};
use crate::hash::sha256_hex;
use crate::provenance::{AcquisitionMethod, DocumentRecord, LicenseTable, ProvenanceRecord, ScreeningFlag};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    /// Emit pages without any license detection.
    pub keep_undetected: bool,
    /// Emit pages that fail a quality rule, flagged `quality-rejected`.
    pub keep_quality_rejected: bool,
    /// Replace sensitive spans in the text instead of only flagging them.
    pub redact: bool,
    pub quality: QualityRules,
}

/// Decoded page content that license evidence offsets refer to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSnapshot {
    pub digest: String,
    pub content: String,
}

impl SourceSnapshot {
    pub fn new(content: String) -> Self {
        SourceSnapshot {
            digest: sha256_hex(&content),
            content,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScannedDocument {
    pub record_index: u64,
    pub document: DocumentRecord,
    pub source: SourceSnapshot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub record_index: u64,
    pub target_uri: Option<String>,
    pub reason: String,
}

/// Counters for one scan. `records_read` always equals emitted + dropped +
/// skipped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanReport {
    pub records_read: u64,
    pub emitted: u64,
    pub dropped_undetected: u64,
    pub dropped_quality: u64,
    pub skipped_by_type: u64,
    pub skipped_by_status: u64,
    pub skipped_by_content_type: u64,
    pub skipped_decode: u64,
    pub skipped_malformed: u64,
    /// Records with at least one license detection.
    pub detected: u64,
    pub sensitive_flagged: u64,
    pub decode_errors: Vec<SkippedRecord>,
    pub malformed: Vec<SkippedRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream_error: Option<String>,
}

impl ScanReport {
    pub fn dropped(&self) -> u64 {
        self.dropped_undetected + self.dropped_quality
    }

    pub fn skipped(&self) -> u64 {
        self.skipped_by_type
            + self.skipped_by_status
            + self.skipped_by_content_type
            + self.skipped_decode
            + self.skipped_malformed
    }

    pub fn reconciles(&self) -> bool {
        self.records_read == self.emitted + self.dropped() + self.skipped()
    }

    /// Associative merge of two partial reports.
    pub fn merge(&mut self, other: &ScanReport) {
        self.records_read += other.records_read;
        self.emitted += other.emitted;
        self.dropped_undetected += other.dropped_undetected;
        self.dropped_quality += other.dropped_quality;
        self.skipped_by_type += other.skipped_by_type;
        self.skipped_by_status += other.skipped_by_status;
        self.skipped_by_content_type += other.skipped_by_content_type;
        self.skipped_decode += other.skipped_decode;
        self.skipped_malformed += other.skipped_malformed;
        self.detected += other.detected;
        self.sensitive_flagged += other.sensitive_flagged;
        self.decode_errors.extend(other.decode_errors.iter().cloned());
        self.malformed.extend(other.malformed.iter().cloned());
        if self.stream_error.is_none() {
            self.stream_error.clone_from(&other.stream_error);
        }
    }

    fn record(&mut self, outcome: &Outcome) {
        self.records_read += 1;
        match outcome {
            Outcome::Emitted(doc) => {
                self.emitted += 1;
                if !doc.document.licenses.is_empty() {
                    self.detected += 1;
                }
                if doc.document.flags.contains(&ScreeningFlag::SensitiveDataFound)
                    || doc.document.flags.contains(&ScreeningFlag::SensitiveDataRedacted)
                {
                    self.sensitive_flagged += 1;
                }
            }
            Outcome::DroppedUndetected => self.dropped_undetected += 1,
            Outcome::DroppedQuality { detected } => {
                self.dropped_quality += 1;
                if *detected {
                    self.detected += 1;
                }
            }
            Outcome::SkippedType => self.skipped_by_type += 1,
            Outcome::SkippedStatus => self.skipped_by_status += 1,
            Outcome::SkippedContentType => self.skipped_by_content_type += 1,
            Outcome::SkippedDecode(r) => {
                self.skipped_decode += 1;
                self.decode_errors.push(r.clone());
            }
            Outcome::SkippedMalformed(r) => {
                self.skipped_malformed += 1;
                self.malformed.push(r.clone());
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum ScanError {
    /// The stream ended inside a record. Every complete record before the
    /// break has already been handed to the sink.
    #[error("WARC stream error after {} records: {detail}", report.records_read)]
    Stream { report: Box<ScanReport>, detail: String },
    #[error(transparent)]
    Sink(#[from] crate::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    /// Records are processed concurrently in batches and re-sequenced
    /// before emission.
    Parallel { batch_size: usize },
}

/// Immutable per-run context shared by all record workers.
pub struct ScanContext<'a> {
    pub config: &'a ScanConfig,
    pub config_hash: String,
    pub table: &'a LicenseTable,
    /// Upper bound for crawl dates.
    pub ingested_at: DateTime<Utc>,
}

#[derive(Debug)]
enum Outcome {
    Emitted(Box<ScannedDocument>),
    DroppedUndetected,
    DroppedQuality { detected: bool },
    SkippedType,
    SkippedStatus,
    SkippedContentType,
    SkippedDecode(SkippedRecord),
    SkippedMalformed(SkippedRecord),
}

fn skipped(record: &WarcRecord, reason: impl Into<String>) -> SkippedRecord {
    SkippedRecord {
        record_index: record.index,
        target_uri: record.target_uri().map(str::to_string),
        reason: reason.into(),
    }
}

fn process_record(record: &WarcRecord, ctx: &ScanContext<'_>) -> Outcome {
    if !record
        .record_type()
        .is_some_and(|t| t.eq_ignore_ascii_case("response"))
    {
        return Outcome::SkippedType;
    }
    let Some(response) = parse_http_response(&record.block) else {
        return Outcome::SkippedMalformed(skipped(record, "unparseable HTTP response"));
    };
    if response.status != 200 {
        return Outcome::SkippedStatus;
    }
    if !response.is_html() {
        return Outcome::SkippedContentType;
    }
    let Some(target) = record.target_uri().filter(|u| url::Url::parse(u).is_ok()) else {
        return Outcome::SkippedMalformed(skipped(record, "missing or invalid WARC-Target-URI"));
    };
    let crawl_date = match record.date().map(DateTime::parse_from_rfc3339) {
        Some(Ok(d)) => d.with_timezone(&Utc),
        _ => return Outcome::SkippedMalformed(skipped(record, "missing or invalid WARC-Date")),
    };
    if crawl_date > ctx.ingested_at {
        return Outcome::SkippedMalformed(skipped(record, "WARC-Date is in the future"));
    }
    let html = match decode_html(&response.body, response.charset()) {
        Ok(h) => h,
        Err(reason) => return Outcome::SkippedDecode(skipped(record, reason)),
    };

    let detections = detect_in_decoded(&html, target, ctx.table);
    let detected = !detections.is_empty();
    if !detected && !ctx.config.keep_undetected {
        return Outcome::DroppedUndetected;
    }

    let mut text = extract_text(&html);
    let verdict = apply_quality_rules(&text, &ctx.config.quality);
    if !verdict.passed && !ctx.config.keep_quality_rejected {
        return Outcome::DroppedQuality { detected };
    }
    let findings = screen_sensitive(&text);
    let mut flags = Vec::new();
    if !verdict.passed {
        flags.push(ScreeningFlag::QualityRejected);
    }
    if !findings.is_empty() {
        if ctx.config.redact {
            text = redact(&text, &findings);
            flags.push(ScreeningFlag::SensitiveDataRedacted);
        } else {
            flags.push(ScreeningFlag::SensitiveDataFound);
        }
    }

    let provenance = ProvenanceRecord {
        source_url: target.to_string(),
        crawl_date,
        http_headers: response.headers.clone(),
        html_metadata: extract_metadata(&html),
        acquisition_method: AcquisitionMethod::WarcCrawl,
        pipeline_config_hash: ctx.config_hash.clone(),
        synthetic: None,
    };
    let mut document = DocumentRecord::new(&text, provenance).with_licenses(detections);
    document.flags.extend(flags);
    Outcome::Emitted(Box::new(ScannedDocument {
        record_index: record.index,
        document,
        source: SourceSnapshot::new(html),
    }))
}

fn malformed_outcome(index: u64, reason: String) -> Outcome {
    Outcome::SkippedMalformed(SkippedRecord {
        record_index: index,
        target_uri: None,
        reason,
    })
}

/// Scans a WARC stream, handing each emitted document to `sink` in record
/// order. Serial and parallel execution produce identical output.
pub fn scan_warc<R: Read>(
    input: R,
    ctx: &ScanContext<'_>,
    execution: Execution,
    mut sink: impl FnMut(ScannedDocument) -> crate::Result<()>,
) -> Result<ScanReport, ScanError> {
    let reader = open_warc(input).map_err(|e| crate::Error::io("<warc stream>", e))?;
    let mut report = ScanReport::default();
    let batch_size = match execution {
        Execution::Serial => 1,
        Execution::Parallel { batch_size } => batch_size.max(1),
    };
    let mut batch: Vec<WarcItem> = Vec::with_capacity(batch_size);
    let mut stream_error = None;

    let mut flush = |batch: &mut Vec<WarcItem>, report: &mut ScanReport| -> crate::Result<()> {
        let process = |item: &WarcItem| match item {
            WarcItem::Record(r) => process_record(r, ctx),
            WarcItem::Malformed { index, reason, .. } => malformed_outcome(*index, reason.clone()),
        };
        let outcomes: Vec<Outcome> = if batch.len() > 1 {
            batch.par_iter().map(process).collect()
        } else {
            batch.iter().map(process).collect()
        };
        batch.clear();
        for outcome in outcomes {
            report.record(&outcome);
            if let Outcome::Emitted(doc) = outcome {
                sink(*doc)?;
            }
        }
        Ok(())
    };

    for item in reader {
        match item {
            Ok(item) => {
                batch.push(item);
                if batch.len() >= batch_size {
                    flush(&mut batch, &mut report)?;
                }
            }
            Err(e @ WarcStreamError::Truncated { .. }) | Err(e @ WarcStreamError::Io(_)) => {
                stream_error = Some(e.to_string());
                break;
            }
        }
    }
    flush(&mut batch, &mut report)?;
    if let Some(detail) = stream_error {
        report.stream_error = Some(detail.clone());
        return Err(ScanError::Stream {
            report: Box::new(report),
            detail,
        });
    }
    Ok(report)
}
