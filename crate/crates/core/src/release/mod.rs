//! Content-addressed dataset releases, removals, membership queries and
//! release documentation.

mod audit;
mod datasheet;
mod manifest;
mod metadata;
mod ops;
mod store;

pub use audit::{audit_store, AuditReport, Violation, ViolationKind};
pub use datasheet::{license_summary, render_datasheet, source_breakdown, LicenseSummary, PublicDomainBucket};
pub use manifest::{compute_release_id, validate_label, ReleaseManifest, MANIFEST_FORMAT};
pub use metadata::{emit_metadata, Field, RecordSet, ReleaseMetadata, SourcePointer, METADATA_SCHEMA};
pub use ops::{
    assemble_release, carry_forward, membership_lookup, remove_document, AssembleRequest, Membership,
    MembershipQuery, ProvenanceSummary,
};
pub use store::{PutReport, RemovalReason, Store, StoreWriter, Tombstone};

use crate::error::Result;
use crate::provenance::DocumentRecord;

/// Documents of a release still present in the store.
pub fn release_documents(store: &Store, manifest: &ReleaseManifest) -> Result<Vec<DocumentRecord>> {
    let all = store.documents()?;
    Ok(manifest.doc_ids.iter().filter_map(|id| all.get(id).cloned()).collect())
}

/// Ids of releases whose parent is `release_id`.
pub fn superseded_by(store: &Store, release_id: &str) -> Result<Vec<String>> {
    Ok(store
        .manifests()?
        .into_iter()
        .filter(|m| m.parent.as_deref() == Some(release_id))
        .map(|m| m.release_id)
        .collect())
}

/// Datasheet of a stored release, rendered from its recorded configuration.
pub fn datasheet_for(store: &Store, manifest: &ReleaseManifest) -> Result<String> {
    let config = stored_config(store, manifest)?;
    render_datasheet(manifest, &config, &release_documents(store, manifest)?)
}

pub fn metadata_for(store: &Store, manifest: &ReleaseManifest) -> Result<ReleaseMetadata> {
    let config = stored_config(store, manifest)?;
    emit_metadata(
        manifest,
        &config,
        &release_documents(store, manifest)?,
        superseded_by(store, &manifest.release_id)?,
    )
}

fn stored_config(store: &Store, manifest: &ReleaseManifest) -> Result<crate::config::PipelineConfig> {
    store.config(&manifest.config_hash)?.ok_or_else(|| {
        crate::Error::NotFound(format!("configuration {} of release {}", manifest.config_hash, manifest.label))
    })
}
