use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::datasheet::render_datasheet;
use super::manifest::{compute_release_id, validate_label, ReleaseManifest, MANIFEST_FORMAT};
use super::store::{RemovalReason, Store, StoreWriter, Tombstone};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::hash::{doc_id_for_text, is_hex_digest};
use crate::preference::Decision;
use crate::provenance::{aggregate_with_table, assess_tier, AcquisitionMethod, DocumentRecord, LicenseTable, LicenseTag};

#[derive(Debug, Clone)]
pub struct AssembleRequest<'c> {
    pub doc_ids: Vec<String>,
    /// Release id or label of the previous release.
    pub parent: Option<String>,
    pub label: String,
    pub created_at: DateTime<Utc>,
    pub config: &'c PipelineConfig,
    pub pipeline_counts: BTreeMap<String, u64>,
}

/// Documents of `parent` that have not been removed, plus the removed ones.
pub fn carry_forward(store: &Store, parent: &ReleaseManifest) -> Result<(Vec<String>, Vec<String>)> {
    let tombstones = store.tombstone_map()?;
    let (removed, kept): (Vec<String>, Vec<String>) =
        parent.doc_ids.iter().cloned().partition(|d| tombstones.contains_key(d));
    Ok((kept, removed))
}

/// Seals a new release. Assembling the same documents, parent and config
/// again returns the existing manifest.
pub fn assemble_release(writer: &StoreWriter<'_>, request: AssembleRequest<'_>) -> Result<ReleaseManifest> {
    let store = writer.store();
    validate_label(&request.label)?;
    let doc_ids: Vec<String> = request.doc_ids.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if doc_ids.is_empty() {
        return Err(Error::InvalidArgument("a release needs at least one document".into()));
    }
    let tombstones = store.tombstone_map()?;
    let removed: Vec<String> = doc_ids.iter().filter(|d| tombstones.contains_key(*d)).cloned().collect();
    if !removed.is_empty() {
        return Err(Error::ReleaseRejected {
            reason: "documents have been removed".into(),
            doc_ids: removed,
        });
    }
    let mut docs = Vec::with_capacity(doc_ids.len());
    let mut missing = Vec::new();
    for id in &doc_ids {
        match store.document(id)? {
            Some(d) => docs.push(d),
            None => missing.push(id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::ReleaseRejected {
            reason: "documents are not in the store".into(),
            doc_ids: missing,
        });
    }
    let unlicensed: Vec<String> = docs
        .iter()
        .filter(|d| !d.has_licensing_evidence())
        .map(|d| d.doc_id.clone())
        .collect();
    if !unlicensed.is_empty() {
        return Err(Error::ReleaseRejected {
            reason: "documents lack licensing evidence".into(),
            doc_ids: unlicensed,
        });
    }
    let opted_out: Vec<String> = docs
        .iter()
        .filter(|d| d.signals.iter().any(|s| s.decision == Decision::Exclude))
        .map(|d| d.doc_id.clone())
        .collect();
    if !opted_out.is_empty() {
        return Err(Error::ReleaseRejected {
            reason: "documents carry an exclude preference signal".into(),
            doc_ids: opted_out,
        });
    }

    let parent = request.parent.as_deref().map(|p| store.release(p)).transpose()?;
    let tombstones_applied: Vec<String> = parent
        .as_ref()
        .map(|p| p.doc_ids.iter().filter(|d| tombstones.contains_key(*d)).cloned().collect())
        .unwrap_or_default();
    let config_hash = writer.save_config(request.config)?;
    let parent_id = parent.as_ref().map(|p| p.release_id.clone());
    let release_id = compute_release_id(&doc_ids, parent_id.as_deref(), &config_hash);

    for existing in store.manifests()? {
        if existing.release_id == release_id {
            if existing.label == request.label {
                return store.release(&release_id);
            }
            return Err(Error::InvalidState(format!(
                "identical release already sealed as `{}`",
                existing.label
            )));
        }
        if existing.label == request.label {
            return Err(Error::InvalidState(format!("label `{}` is already used", request.label)));
        }
    }

    let release = &request.config.release;
    let dataset_license = release
        .dataset_license
        .as_deref()
        .map(|l| LicenseTable::builtin().normalize(l))
        .transpose()?;
    let openly_licensed = aggregate_with_table(
        dataset_license.as_ref().unwrap_or(&LicenseTag::unknown("unspecified")),
        &docs,
        LicenseTable::builtin(),
    )?;
    let mut manifest = ReleaseManifest {
        format_version: MANIFEST_FORMAT,
        release_id: release_id.clone(),
        label: request.label,
        seq: writer.take_seq()?,
        created_at: request.created_at,
        parent: parent_id,
        config_hash,
        doc_ids,
        tombstones_applied,
        dataset_license,
        assessment: assess_tier(openly_licensed, release.open_access, release.replicable),
        pipeline_counts: request.pipeline_counts,
        datasheet_ref: format!("datasheets/{release_id}.md"),
        seal: String::new(),
    };
    manifest.seal();
    let datasheet = render_datasheet(&manifest, request.config, &docs)?;
    writer.write_file(&manifest.datasheet_ref, datasheet.as_bytes())?;
    writer.write_manifest(&manifest)?;
    Ok(manifest)
}

/// Records a tombstone and deletes the document text. Removing an already
/// removed document returns the existing tombstone.
pub fn remove_document(
    writer: &StoreWriter<'_>,
    doc_id: &str,
    reason: RemovalReason,
    request_ref: &str,
    created_at: DateTime<Utc>,
) -> Result<Tombstone> {
    let store = writer.store();
    if let Some(t) = store.tombstone_map()?.remove(doc_id) {
        return Ok(t);
    }
    let known = store.document(doc_id)?.is_some()
        || store.manifests()?.iter().any(|m| m.doc_ids.binary_search_by(|d| d.as_str().cmp(doc_id)).is_ok());
    if !known {
        return Err(Error::NotFound(format!("document {doc_id}")));
    }
    let tombstone = Tombstone {
        doc_id: doc_id.to_string(),
        reason,
        request_ref: request_ref.to_string(),
        created_at,
        seq: writer.take_seq()?,
    };
    writer.append_tombstone(&tombstone)?;
    writer.delete_document(doc_id)?;
    Ok(tombstone)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MembershipQuery {
    Url(String),
    DocId(String),
    /// Raw text, hashed with the canonical doc_id function.
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceSummary {
    pub source_url: String,
    pub crawl_date: DateTime<Utc>,
    pub acquisition_method: AcquisitionMethod,
    pub licenses: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub public_domain_basis: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Membership {
    Present {
        doc_id: String,
        provenance: Option<ProvenanceSummary>,
    },
    /// Only the reason category is disclosed, never the requester.
    Removed { doc_id: String, reason: RemovalReason },
    Absent,
}

impl Membership {
    pub fn status(&self) -> &'static str {
        match self {
            Membership::Present { .. } => "present",
            Membership::Removed { .. } => "removed",
            Membership::Absent => "absent",
        }
    }
}

fn summarize(doc: &DocumentRecord) -> ProvenanceSummary {
    ProvenanceSummary {
        source_url: doc.source_url.clone(),
        crawl_date: doc.provenance.crawl_date,
        acquisition_method: doc.provenance.acquisition_method,
        licenses: doc.distinct_license_ids().into_iter().map(str::to_string).collect(),
        public_domain_basis: doc
            .pd_classification
            .as_ref()
            .filter(|_| doc.is_public_domain())
            .map(|c| c.basis.as_str().to_string()),
    }
}

/// Whether a document is in a release. A removed document reports
/// `removed` even when an older release still lists it.
pub fn membership_lookup(store: &Store, query: &MembershipQuery, release: &str) -> Result<Membership> {
    let manifest = store.release(release)?;
    let candidates: BTreeSet<String> = match query {
        MembershipQuery::DocId(id) => {
            let id = id.trim().to_ascii_lowercase();
            if is_hex_digest(&id) {
                BTreeSet::from([id])
            } else {
                BTreeSet::new()
            }
        }
        MembershipQuery::Text(text) => BTreeSet::from([doc_id_for_text(text)]),
        MembershipQuery::Url(url) => store.url_index()?.remove(url).unwrap_or_default(),
    };
    let tombstones = store.tombstone_map()?;
    let in_release = |id: &String| manifest.doc_ids.binary_search(id).is_ok();
    for id in &candidates {
        if let Some(t) = tombstones.get(id) {
            if in_release(id) || manifest.tombstones_applied.contains(id) || candidates.len() == 1 {
                return Ok(Membership::Removed {
                    doc_id: id.clone(),
                    reason: t.reason,
                });
            }
        }
    }
    for id in &candidates {
        if in_release(id) {
            return Ok(Membership::Present {
                doc_id: id.clone(),
                provenance: store.document(id)?.as_ref().map(summarize),
            });
        }
    }
    Ok(Membership::Absent)
}
