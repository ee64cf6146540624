//! Store audit: manifest integrity, evidence soundness, signal
//! completeness and tombstone propagation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::manifest::ReleaseManifest;
use super::store::Store;
use crate::error::{Error, Result};
use crate::hash::sha256_hex;
use crate::preference::Decision;
use crate::provenance::{DetectionMethod, DocumentRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    ManifestIntegrity,
    EvidenceSoundness,
    SignalCompleteness,
    TombstonePropagation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Manifest file, doc_id or tombstone the violation concerns.
    pub subject: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub manifests_checked: usize,
    pub releases_checked: Vec<String>,
    pub documents_checked: usize,
    pub detections_checked: usize,
    pub tombstones_checked: usize,
    pub signals_checked: usize,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn flag(&mut self, kind: ViolationKind, subject: impl Into<String>, detail: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            subject: subject.into(),
            detail: detail.into(),
        });
    }
}

fn check_evidence(store: &Store, doc: &DocumentRecord, report: &mut AuditReport) -> Result<()> {
    use ViolationKind::EvidenceSoundness as E;
    if !doc.verify_id() {
        report.flag(E, &doc.doc_id, "doc_id does not match the text");
    }
    if !doc.has_licensing_evidence() {
        report.flag(E, &doc.doc_id, "no license detection or public-domain classification");
    }
    let mut sources: BTreeMap<String, Option<String>> = BTreeMap::new();
    for (i, det) in doc.licenses.iter().enumerate() {
        report.detections_checked += 1;
        let ev = det.evidence();
        if matches!(det.method(), DetectionMethod::DeclaredBySource | DetectionMethod::Manual) {
            if ev.offset != 0 || sha256_hex(&ev.snippet) != ev.input_digest {
                report.flag(E, &doc.doc_id, format!("detection {i}: declaration does not match its digest"));
            }
            continue;
        }
        if !sources.contains_key(&ev.input_digest) {
            let content = store.source(&ev.input_digest)?;
            sources.insert(ev.input_digest.clone(), content);
        }
        match &sources[&ev.input_digest] {
            None => report.flag(E, &doc.doc_id, format!("detection {i}: source snapshot {} is missing", ev.input_digest)),
            Some(content) => {
                if sha256_hex(content) != ev.input_digest {
                    report.flag(E, &doc.doc_id, format!("detection {i}: source snapshot does not match its digest"));
                } else if !ev.verify_against(content) {
                    report.flag(
                        E,
                        &doc.doc_id,
                        format!("detection {i}: snippet not found at offset {}", ev.offset),
                    );
                }
            }
        }
    }
    Ok(())
}

/// Audits one release, or every release when `release` is `None`. Manifest
/// integrity and tombstone propagation are always checked store-wide.
pub fn audit_store(store: &Store, release: Option<&str>) -> Result<AuditReport> {
    let mut report = AuditReport::default();
    let mut manifests: Vec<ReleaseManifest> = Vec::new();
    let mut labels: BTreeMap<String, String> = BTreeMap::new();
    for (path, bytes) in store.manifest_files()? {
        report.manifests_checked += 1;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        match ReleaseManifest::verify_bytes(&bytes) {
            Ok(m) => {
                if name != format!("{}.json", m.release_id) {
                    report.flag(ViolationKind::ManifestIntegrity, &name, "file name does not match release_id");
                }
                if let Some(other) = labels.insert(m.label.clone(), m.release_id.clone()) {
                    report.flag(
                        ViolationKind::ManifestIntegrity,
                        &name,
                        format!("label `{}` also used by {other}", m.label),
                    );
                }
                manifests.push(m);
            }
            Err(problems) => {
                for p in problems {
                    report.flag(ViolationKind::ManifestIntegrity, &name, p);
                }
                // Keep checking propagation against whatever still parses.
                if let Ok(m) = serde_json::from_slice::<ReleaseManifest>(&bytes) {
                    manifests.push(m);
                }
            }
        }
    }
    manifests.sort_by_key(|m| m.seq);

    let selected: Vec<&ReleaseManifest> = match release {
        Some(r) => {
            let found: Vec<_> = manifests.iter().filter(|m| m.release_id == r || m.label == r).collect();
            if found.is_empty() {
                return Err(Error::NotFound(format!("release `{r}`")));
            }
            found
        }
        None => manifests.iter().collect(),
    };

    let tombstones = store.tombstones()?;
    let tombstoned: BTreeMap<&str, u64> = tombstones.iter().map(|t| (t.doc_id.as_str(), t.seq)).collect();
    let documents = store.documents()?;

    let mut checked = BTreeSet::new();
    for m in &selected {
        report.releases_checked.push(m.release_id.clone());
        for id in &m.doc_ids {
            if tombstoned.contains_key(id.as_str()) || !checked.insert(id.clone()) {
                continue;
            }
            report.documents_checked += 1;
            match documents.get(id) {
                None => report.flag(ViolationKind::EvidenceSoundness, id, "released document missing from the store"),
                Some(doc) => {
                    check_evidence(store, doc, &mut report)?;
                    if doc.signals.iter().any(|s| s.decision == Decision::Exclude) {
                        report.flag(
                            ViolationKind::SignalCompleteness,
                            id,
                            "released document carries an exclude signal",
                        );
                    }
                }
            }
        }
    }

    match store.signals() {
        Err(e) => report.flag(ViolationKind::SignalCompleteness, "signals/log.jsonl", e.to_string()),
        Ok(log) => {
            report.signals_checked = log.len();
            for t in &tombstones {
                if !log.contains(&t.request_ref) {
                    report.flag(
                        ViolationKind::SignalCompleteness,
                        &t.doc_id,
                        format!("removal request {} is not in the signal log", t.request_ref),
                    );
                }
            }
            for doc in documents.values() {
                for s in &doc.signals {
                    if !log.contains(&s.id()) {
                        report.flag(
                            ViolationKind::SignalCompleteness,
                            &doc.doc_id,
                            format!("{} signal from {} is not in the signal log", s.kind.as_str(), s.source),
                        );
                    }
                }
            }
        }
    }

    for t in &tombstones {
        report.tombstones_checked += 1;
        if documents.contains_key(&t.doc_id) {
            report.flag(ViolationKind::TombstonePropagation, &t.doc_id, "removed document text is still stored");
        }
        for m in manifests.iter().filter(|m| m.seq > t.seq) {
            if m.doc_ids.binary_search(&t.doc_id).is_ok() {
                report.flag(
                    ViolationKind::TombstonePropagation,
                    &t.doc_id,
                    format!("release {} sealed after removal still lists it", m.label),
                );
            }
        }
    }
    Ok(report)
}
