//! Opt-out lists: one URL, URL prefix, or document hash per line.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::signal::{Decision, PreferenceSignal, SignalKind, Subject};
use crate::hash::is_hex_digest;
use crate::provenance::DocumentRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "kebab-case")]
pub enum OptoutEntry {
    Url(String),
    /// Absolute URL ending in `/`; excludes everything beneath it.
    Prefix(String),
    /// Lowercase document hash.
    DocId(String),
}

impl OptoutEntry {
    pub fn matches(&self, doc: &DocumentRecord) -> bool {
        match self {
            OptoutEntry::Url(u) => doc.source_url == *u,
            OptoutEntry::Prefix(p) => doc.source_url.starts_with(p.as_str()),
            OptoutEntry::DocId(h) => doc.doc_id == *h,
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            OptoutEntry::Url(s) | OptoutEntry::Prefix(s) | OptoutEntry::DocId(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedEntry {
    pub line: usize,
    pub text: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptoutList {
    /// Identifier recorded as the signal source.
    pub id: String,
    pub entries: Vec<OptoutEntry>,
    pub rejected: Vec<RejectedEntry>,
}

fn parse_entry(s: &str) -> Result<OptoutEntry, String> {
    if s.len() == 64 && s.chars().all(|c| c.is_ascii_hexdigit()) {
        let lower = s.to_ascii_lowercase();
        debug_assert!(is_hex_digest(&lower));
        return Ok(OptoutEntry::DocId(lower));
    }
    let url = url::Url::parse(s).map_err(|e| format!("not an absolute URL or hash: {e}"))?;
    if url.cannot_be_a_base() || url.host_str().is_none() {
        return Err("URL has no host".into());
    }
    if s.ends_with('/') {
        Ok(OptoutEntry::Prefix(s.to_string()))
    } else {
        Ok(OptoutEntry::Url(s.to_string()))
    }
}

/// Parses list text. Malformed lines are collected with their line number
/// and do not stop parsing.
pub fn parse_optout(text: &str, id: &str) -> OptoutList {
    let mut entries = Vec::new();
    let mut rejected = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_entry(line) {
            Ok(e) => {
                if !entries.contains(&e) {
                    entries.push(e);
                }
            }
            Err(reason) => rejected.push(RejectedEntry {
                line: i + 1,
                text: line.to_string(),
                reason,
            }),
        }
    }
    OptoutList {
        id: id.to_string(),
        entries,
        rejected,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptoutOutcome {
    pub included: Vec<DocumentRecord>,
    pub excluded: Vec<DocumentRecord>,
    pub signals: Vec<PreferenceSignal>,
}

impl OptoutList {
    pub fn first_match(&self, doc: &DocumentRecord) -> Option<&OptoutEntry> {
        self.entries.iter().find(|e| e.matches(doc))
    }

    pub fn signal_for(&self, doc: &DocumentRecord, entry: &OptoutEntry, observed_at: DateTime<Utc>) -> PreferenceSignal {
        PreferenceSignal {
            subject: Subject::document(&doc.source_url, &doc.doc_id),
            kind: SignalKind::OptoutList,
            source: self.id.clone(),
            observed_at,
            decision: Decision::Exclude,
            purpose: None,
            matched: Some(entry.as_str().to_string()),
        }
    }
}

/// Splits documents into included and excluded. Each excluded document
/// carries one opt-out signal, which is also returned.
pub fn apply_optout(documents: Vec<DocumentRecord>, list: &OptoutList, observed_at: DateTime<Utc>) -> OptoutOutcome {
    let mut out = OptoutOutcome::default();
    for mut doc in documents {
        match list.first_match(&doc) {
            Some(entry) => {
                let signal = list.signal_for(&doc, entry, observed_at);
                let id = signal.id();
                if !doc.signals.iter().any(|s| s.id() == id) {
                    doc.signals.push(signal.clone());
                }
                out.signals.push(signal);
                out.excluded.push(doc);
            }
            None => out.included.push(doc),
        }
    }
    out
}
