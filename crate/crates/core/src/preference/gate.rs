//! Applies robots.txt snapshots and an opt-out list to scanned documents.

use std::collections::BTreeMap;
use std::io::BufRead;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optout::OptoutList;
use super::robots::{parse_robots, RobotsPolicy};
use super::signal::{Decision, PreferenceSignal, SignalKind, SignalLog, Subject};
use crate::error::{Error, Result};
use crate::provenance::DocumentRecord;

/// `scheme://host[:port]` of an absolute URL.
pub fn origin_of(url: &str) -> Option<String> {
    let parsed = url::Url::parse(url).ok()?;
    let origin = parsed.origin();
    origin.is_tuple().then(|| origin.ascii_serialization())
}

/// Path and query used for robots matching.
fn robots_path(url: &str) -> String {
    match url::Url::parse(url) {
        Ok(u) => match u.query() {
            Some(q) => format!("{}?{q}", u.path()),
            None => u.path().to_string(),
        },
        Err(_) => "/".to_string(),
    }
}

/// One captured robots.txt, as stored in a snapshot file line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotsSnapshot {
    pub origin: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fetched_at: Option<DateTime<Utc>>,
    pub text: String,
}

/// Parsed robots policies keyed by origin.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RobotsSnapshots {
    by_origin: BTreeMap<String, RobotsPolicy>,
}

impl RobotsSnapshots {
    pub fn insert(&mut self, snapshot: &RobotsSnapshot) -> Result<()> {
        let origin = origin_of(&snapshot.origin)
            .ok_or_else(|| Error::InvalidArgument(format!("robots origin `{}` is not an absolute URL", snapshot.origin)))?;
        let mut policy = parse_robots(&snapshot.text, &origin);
        policy.fetched_at = snapshot.fetched_at;
        self.by_origin.insert(origin, policy);
        Ok(())
    }

    /// Reads JSONL lines of `{origin, fetched_at?, text}`. A later line for
    /// the same origin replaces an earlier one.
    pub fn read_jsonl<R: BufRead>(&mut self, input: R) -> Result<()> {
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<robots snapshots>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let snap: RobotsSnapshot = serde_json::from_str(&line)
                .map_err(|e| Error::InvalidArgument(format!("robots snapshot line {}: {e}", i + 1)))?;
            self.insert(&snap)?;
        }
        Ok(())
    }

    pub fn get(&self, origin: &str) -> Option<&RobotsPolicy> {
        self.by_origin.get(origin)
    }

    pub fn len(&self) -> usize {
        self.by_origin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_origin.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateReport {
    pub documents_read: usize,
    pub included: usize,
    pub excluded_by_robots: usize,
    pub excluded_by_optout: usize,
    pub exclude_signals: usize,
    pub include_signals: usize,
    pub without_robots_policy: usize,
    pub optout_rejected_entries: usize,
}

impl GateReport {
    pub fn excluded(&self) -> usize {
        self.excluded_by_robots + self.excluded_by_optout
    }

    pub fn reconciles(&self) -> bool {
        self.documents_read == self.included + self.excluded() && self.exclude_signals == self.excluded()
    }
}

#[derive(Debug, Clone, Default)]
pub struct GateOutcome {
    pub included: Vec<DocumentRecord>,
    pub excluded: Vec<DocumentRecord>,
    pub log: SignalLog,
    pub report: GateReport,
}

enum Verdict {
    Include(Option<PreferenceSignal>, bool),
    ExcludeRobots(PreferenceSignal),
    ExcludeOptout(PreferenceSignal),
}

fn judge(
    doc: &DocumentRecord,
    robots: &RobotsSnapshots,
    optout: Option<&OptoutList>,
    agent: &str,
    optout_observed_at: DateTime<Utc>,
) -> Verdict {
    let mut allow_signal = None;
    let policy = origin_of(&doc.source_url).and_then(|o| robots.get(&o));
    if let Some(policy) = policy {
        let decision = policy.evaluate(agent, &robots_path(&doc.source_url));
        if let Some(rule) = decision.matched {
            let signal = PreferenceSignal {
                subject: Subject::document(&doc.source_url, &doc.doc_id),
                kind: match decision.decision {
                    Decision::Exclude => SignalKind::RobotsDisallow,
                    Decision::Include => SignalKind::RobotsAllow,
                },
                source: format!("{}/robots.txt", policy.origin),
                observed_at: policy.fetched_at.unwrap_or(doc.provenance.crawl_date),
                decision: decision.decision,
                purpose: None,
                matched: Some(format!("line {}: {:?} {}", rule.line, rule.kind, rule.pattern)),
            };
            if decision.decision == Decision::Exclude {
                return Verdict::ExcludeRobots(signal);
            }
            allow_signal = Some(signal);
        }
    }
    if let Some(list) = optout {
        if let Some(entry) = list.first_match(doc) {
            return Verdict::ExcludeOptout(list.signal_for(doc, entry, optout_observed_at));
        }
    }
    Verdict::Include(allow_signal, policy.is_some())
}

fn attach(doc: &mut DocumentRecord, signal: &PreferenceSignal) {
    let id = signal.id();
    if !doc.signals.iter().any(|s| s.id() == id) {
        doc.signals.push(signal.clone());
    }
}

/// Robots rules are checked first; a document they exclude is not also
/// checked against the opt-out list, so every excluded document carries
/// exactly one exclude signal from this run.
pub fn gate_documents(
    documents: Vec<DocumentRecord>,
    robots: &RobotsSnapshots,
    optout: Option<&OptoutList>,
    agent: &str,
    optout_observed_at: DateTime<Utc>,
) -> GateOutcome {
    let verdicts: Vec<Verdict> = documents
        .par_iter()
        .map(|d| judge(d, robots, optout, agent, optout_observed_at))
        .collect();
    let mut out = GateOutcome {
        report: GateReport {
            documents_read: documents.len(),
            optout_rejected_entries: optout.map_or(0, |l| l.rejected.len()),
            ..GateReport::default()
        },
        ..GateOutcome::default()
    };
    for (mut doc, verdict) in documents.into_iter().zip(verdicts) {
        match verdict {
            Verdict::Include(signal, has_policy) => {
                if !has_policy {
                    out.report.without_robots_policy += 1;
                }
                if let Some(s) = signal {
                    attach(&mut doc, &s);
                    out.report.include_signals += 1;
                    out.log.append(s);
                }
                out.report.included += 1;
                out.included.push(doc);
            }
            Verdict::ExcludeRobots(s) | Verdict::ExcludeOptout(s) => {
                if s.kind == SignalKind::RobotsDisallow {
                    out.report.excluded_by_robots += 1;
                } else {
                    out.report.excluded_by_optout += 1;
                }
                attach(&mut doc, &s);
                out.report.exclude_signals += 1;
                out.log.append(s);
                out.excluded.push(doc);
            }
        }
    }
    out
}
