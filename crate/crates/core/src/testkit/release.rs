//! Random assemble/remove histories against an on-disk store, checking the
//! release invariants after every step.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::PipelineConfig;
use crate::error::Error;
use crate::preference::{Decision, PreferenceSignal, SignalKind, SignalLog, Subject};
use crate::provenance::{AcquisitionMethod, DocumentRecord, LicenseTable, ProvenanceRecord};
use crate::release::{
    assemble_release, audit_store, carry_forward, membership_lookup, remove_document, AssembleRequest, Membership,
    MembershipQuery, ReleaseManifest, RemovalReason, Store,
};
use crate::scanner::{detect_in_decoded, SourceSnapshot};

const LICENSE_URLS: &[&str] = &[
    "https://creativecommons.org/licenses/by/4.0/",
    "https://creativecommons.org/licenses/by-sa/4.0/",
    "https://creativecommons.org/publicdomain/zero/1.0/",
];

fn epoch() -> DateTime<Utc> {
    "2024-01-01T00:00:00Z".parse().expect("valid timestamp")
}

/// A crawled page with a rel-license link and its source snapshot.
pub fn licensed_document(i: usize, license_url: &str) -> (DocumentRecord, Option<SourceSnapshot>) {
    let url = format!("https://site{}.example/doc/{i}", i % 4);
    let text = format!("Document {i} body text.");
    let html = format!("<html><body><p>{text}</p><a rel=\"license\" href=\"{license_url}\">license</a></body></html>");
    let licenses = detect_in_decoded(&html, &url, LicenseTable::builtin());
    let doc = DocumentRecord::new(&text, ProvenanceRecord::new(&url, epoch(), AcquisitionMethod::WarcCrawl, "cfg"))
        .with_licenses(licenses);
    (doc, Some(SourceSnapshot::new(html)))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SequenceStats {
    pub steps: usize,
    pub releases: usize,
    pub removals: usize,
    pub rejected_assemblies: usize,
    pub lookups: usize,
}

struct Sim<'a> {
    store: &'a Store,
    config: PipelineConfig,
    docs: Vec<DocumentRecord>,
    /// Bytes of every manifest as sealed, keyed by release id.
    sealed: BTreeMap<String, Vec<u8>>,
    latest: Option<ReleaseManifest>,
    removed: BTreeSet<String>,
    clock: DateTime<Utc>,
    stats: SequenceStats,
}

fn fail(step: usize, what: impl std::fmt::Display) -> String {
    format!("step {step}: {what}")
}

impl Sim<'_> {
    fn tick(&mut self) -> DateTime<Utc> {
        self.clock += Duration::minutes(1);
        self.clock
    }

    fn assemble(&mut self, step: usize, rng: &mut ChaCha8Rng) -> Result<(), String> {
        let mut ids: BTreeSet<String> = BTreeSet::new();
        if let (Some(parent), true) = (&self.latest, rng.gen_bool(0.6)) {
            let (kept, _) = carry_forward(self.store, parent).map_err(|e| fail(step, e))?;
            ids.extend(kept);
        }
        for d in &self.docs {
            if rng.gen_bool(0.3) {
                ids.insert(d.doc_id.clone());
            }
        }
        let smuggled: Vec<String> = ids.intersection(&self.removed).cloned().collect();
        let label = format!("v{}", self.stats.releases + 1);
        let created_at = self.tick();
        let writer = self.store.writer().map_err(|e| fail(step, e))?;
        let result = assemble_release(
            &writer,
            AssembleRequest {
                doc_ids: ids.iter().cloned().collect(),
                parent: self.latest.as_ref().map(|m| m.release_id.clone()),
                label: label.clone(),
                created_at,
                config: &self.config,
                pipeline_counts: BTreeMap::new(),
            },
        );
        drop(writer);
        match result {
            Ok(manifest) => {
                if !smuggled.is_empty() || ids.is_empty() {
                    return Err(fail(step, "assembly with removed or no documents was accepted"));
                }
                if manifest.doc_ids != ids.iter().cloned().collect::<Vec<_>>() {
                    return Err(fail(step, "manifest documents differ from the request"));
                }
                if self.sealed.contains_key(&manifest.release_id) {
                    return Err(fail(step, "existing release returned for a new label"));
                }
                self.sealed.insert(manifest.release_id.clone(), manifest.to_bytes());
                self.latest = Some(manifest);
                self.stats.releases += 1;
            }
            Err(Error::ReleaseRejected { doc_ids, .. }) => {
                let rejected: BTreeSet<String> = doc_ids.into_iter().collect();
                if smuggled.is_empty() || rejected != smuggled.iter().cloned().collect() {
                    return Err(fail(step, format!("unexpected rejection of {rejected:?}")));
                }
                self.stats.rejected_assemblies += 1;
            }
            Err(Error::InvalidArgument(_)) if ids.is_empty() => self.stats.rejected_assemblies += 1,
            // Same documents, parent and config as an existing release.
            Err(Error::InvalidState(_)) if smuggled.is_empty() => {
                let parent = self.latest.as_ref().map(|m| m.release_id.clone());
                let dup = self.sealed.values().any(|bytes| {
                    let m: ReleaseManifest = serde_json::from_slice(bytes).expect("sealed manifest parses");
                    m.parent == parent && m.doc_ids == ids.iter().cloned().collect::<Vec<_>>()
                });
                if !dup {
                    return Err(fail(step, "invalid-state without a duplicate release"));
                }
                self.stats.rejected_assemblies += 1;
            }
            Err(e) => return Err(fail(step, format!("assemble failed: {e}"))),
        }
        Ok(())
    }

    fn remove(&mut self, step: usize, rng: &mut ChaCha8Rng) -> Result<(), String> {
        let doc = self.docs.choose(rng).expect("non-empty corpus").clone();
        let observed_at = self.tick();
        let signal = PreferenceSignal {
            subject: Subject::document(&doc.source_url, &doc.doc_id),
            kind: SignalKind::ManualRemovalRequest,
            source: format!("ticket-{step}"),
            observed_at,
            decision: Decision::Exclude,
            purpose: None,
            matched: None,
        };
        let reason = *[RemovalReason::Optout, RemovalReason::LicenseDispute, RemovalReason::SensitiveContent]
            .choose(rng)
            .expect("non-empty");
        let writer = self.store.writer().map_err(|e| fail(step, e))?;
        let before = self.store.tombstone_map().map_err(|e| fail(step, e))?;
        writer
            .append_signals(&std::iter::once(signal.clone()).collect::<SignalLog>())
            .map_err(|e| fail(step, e))?;
        let tombstone = remove_document(&writer, &doc.doc_id, reason, &signal.id(), observed_at)
            .map_err(|e| fail(step, format!("remove failed: {e}")))?;
        drop(writer);
        if let Some(existing) = before.get(&doc.doc_id) {
            if *existing != tombstone {
                return Err(fail(step, "second removal created a new tombstone"));
            }
        }
        let count = self.store.tombstones().map_err(|e| fail(step, e))?.iter().filter(|t| t.doc_id == doc.doc_id).count();
        if count != 1 {
            return Err(fail(step, format!("{count} tombstones for one document")));
        }
        self.removed.insert(doc.doc_id);
        self.stats.removals += 1;
        Ok(())
    }

    fn check(&mut self, step: usize) -> Result<(), String> {
        // Every sealed manifest still verifies and is byte-for-byte unchanged.
        for (id, bytes) in &self.sealed {
            let on_disk = self.store.release(id).map_err(|e| fail(step, format!("release {id}: {e}")))?;
            if on_disk.to_bytes() != *bytes {
                return Err(fail(step, format!("release {id} changed after sealing")));
            }
            ReleaseManifest::verify_bytes(bytes).map_err(|p| fail(step, format!("{id}: {p:?}")))?;
        }
        // Removal propagation.
        let tombstones = self.store.tombstones().map_err(|e| fail(step, e))?;
        let manifests = self.store.manifests().map_err(|e| fail(step, e))?;
        for t in &tombstones {
            for m in manifests.iter().filter(|m| m.seq > t.seq) {
                if m.doc_ids.binary_search(&t.doc_id).is_ok() {
                    return Err(fail(step, format!("{} sealed after removal of {}", m.label, t.doc_id)));
                }
            }
        }
        // Membership trichotomy, by doc id, URL and text.
        for m in &manifests {
            for d in &self.docs {
                let in_release = m.doc_ids.binary_search(&d.doc_id).is_ok();
                let removed = self.removed.contains(&d.doc_id);
                let mut queries = vec![MembershipQuery::DocId(d.doc_id.clone()), MembershipQuery::Text(d.text.clone())];
                queries.push(MembershipQuery::Url(d.source_url.clone()));
                for q in queries {
                    let answer = membership_lookup(self.store, &q, &m.label).map_err(|e| fail(step, e))?;
                    self.stats.lookups += 1;
                    let ok = match &answer {
                        Membership::Present { doc_id, .. } => !removed && in_release && *doc_id == d.doc_id,
                        Membership::Removed { doc_id, .. } => removed && *doc_id == d.doc_id,
                        Membership::Absent => !removed && !in_release,
                    };
                    if !ok {
                        return Err(fail(
                            step,
                            format!("{:?} in {} answered {} (in release {in_release}, removed {removed})", q, m.label, answer.status()),
                        ));
                    }
                }
            }
            let never = membership_lookup(self.store, &MembershipQuery::Url("https://never-seen.example/".into()), &m.label)
                .map_err(|e| fail(step, e))?;
            if never != Membership::Absent {
                return Err(fail(step, "unknown URL is not absent"));
            }
        }
        Ok(())
    }
}

/// Runs one random history of `steps` operations over `docs` documents in a
/// fresh store at `root`.
pub fn run_random_sequence(root: &Path, seed: u64, docs: usize, steps: usize) -> Result<SequenceStats, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let store = Store::init(root).map_err(|e| e.to_string())?;
    let corpus: Vec<_> = (0..docs)
        .map(|i| licensed_document(i, LICENSE_URLS[i % LICENSE_URLS.len()]))
        .collect();
    let mut config = PipelineConfig::default();
    config.release.open_access = true;
    config.release.replicable = true;
    store
        .writer()
        .and_then(|w| w.put_documents(corpus.clone()))
        .map_err(|e| e.to_string())?;
    let mut sim = Sim {
        store: &store,
        config,
        docs: corpus.into_iter().map(|(d, _)| d).collect(),
        sealed: BTreeMap::new(),
        latest: None,
        removed: BTreeSet::new(),
        clock: epoch(),
        stats: SequenceStats::default(),
    };
    for step in 0..steps {
        if step == 0 || rng.gen_bool(0.55) {
            sim.assemble(step, &mut rng)?;
        } else {
            sim.remove(step, &mut rng)?;
        }
        sim.check(step)?;
        sim.stats.steps += 1;
    }
    let audit = audit_store(&store, None).map_err(|e| e.to_string())?;
    if !audit.passed() {
        return Err(format!("audit failed: {:?}", audit.violations));
    }
    Ok(sim.stats)
}
