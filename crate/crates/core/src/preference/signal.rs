use std::collections::HashSet;
use std::io::{BufRead, Write};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    RobotsDisallow,
    RobotsAllow,
    OptoutList,
    ManualRemovalRequest,
}

impl SignalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalKind::RobotsDisallow => "robots-disallow",
            SignalKind::RobotsAllow => "robots-allow",
            SignalKind::OptoutList => "optout-list",
            SignalKind::ManualRemovalRequest => "manual-removal-request",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Include,
    Exclude,
}

/// What a signal is about: a URL, a document hash, or both.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Subject {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
}

impl Subject {
    pub fn document(url: &str, doc_id: &str) -> Self {
        Subject {
            url: Some(url.to_string()),
            doc_id: Some(doc_id.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceSignal {
    pub subject: Subject,
    pub kind: SignalKind,
    /// Where the signal was observed: robots URL, list id, or ticket id.
    pub source: String,
    pub observed_at: DateTime<Utc>,
    pub decision: Decision,
    /// Free-form use purpose; no vocabulary is interpreted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose: Option<String>,
    /// The rule or list entry that produced the signal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched: Option<String>,
}

impl PreferenceSignal {
    /// Identity used for deduplication: subject, kind and source.
    pub fn id(&self) -> String {
        sha256_hex(format!(
            "{}\u{1f}{}\u{1f}{}\u{1f}{}",
            self.subject.url.as_deref().unwrap_or(""),
            self.subject.doc_id.as_deref().unwrap_or(""),
            self.kind.as_str(),
            self.source
        ))
    }
}

/// Append-only signal collection, deduplicated by [`PreferenceSignal::id`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignalLog {
    signals: Vec<PreferenceSignal>,
    seen: HashSet<String>,
}

impl SignalLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false when an equivalent signal is already present.
    pub fn append(&mut self, signal: PreferenceSignal) -> bool {
        if self.seen.insert(signal.id()) {
            self.signals.push(signal);
            true
        } else {
            false
        }
    }

    pub fn merge(&mut self, other: SignalLog) {
        for s in other.signals {
            self.append(s);
        }
    }

    pub fn contains(&self, id: &str) -> bool {
        self.seen.contains(id)
    }

    pub fn signals(&self) -> &[PreferenceSignal] {
        &self.signals
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn exclusions(&self) -> impl Iterator<Item = &PreferenceSignal> {
        self.signals.iter().filter(|s| s.decision == Decision::Exclude)
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut log = SignalLog::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<signal log>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let s = serde_json::from_str(&line)
                .map_err(|e| Error::Decode(format!("signal log line {}: {e}", i + 1)))?;
            log.append(s);
        }
        Ok(log)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for s in &self.signals {
            serde_json::to_writer(&mut out, s)?;
            writeln!(out).map_err(|e| Error::io("<signal log>", e))?;
        }
        Ok(())
    }
}

impl FromIterator<PreferenceSignal> for SignalLog {
    fn from_iter<I: IntoIterator<Item = PreferenceSignal>>(iter: I) -> Self {
        let mut log = SignalLog::new();
        for s in iter {
            log.append(s);
        }
        log
    }
}
