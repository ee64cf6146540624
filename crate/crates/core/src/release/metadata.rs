//! Machine-readable release metadata: a small, versioned JSON schema
//! modelled on the Croissant dataset vocabulary.

use serde::{Deserialize, Serialize};

use super::datasheet::{license_summary, source_breakdown, LicenseSummary};
use super::manifest::ReleaseManifest;
use crate::config::PipelineConfig;
use crate::error::Result;
use crate::provenance::{DocumentRecord, OpennessAssessment};

pub const METADATA_SCHEMA: &str = "curator-metadata/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    #[serde(rename = "dataType")]
    pub data_type: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSet {
    pub name: String,
    pub description: String,
    pub field: Vec<Field>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourcePointer {
    pub origin: String,
    pub acquisition_method: String,
    pub documents: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseMetadata {
    #[serde(rename = "@context")]
    pub context: serde_json::Value,
    #[serde(rename = "@type")]
    pub kind: String,
    pub schema_version: String,
    pub name: String,
    pub version: String,
    pub release_id: String,
    pub date_published: String,
    pub parent: Option<String>,
    /// Later releases built on this one.
    pub superseded_by: Vec<String>,
    /// Set once a later release exists; consumers should move to it.
    pub deprecated: bool,
    pub config_hash: String,
    pub document_count: usize,
    pub dataset_license: Option<String>,
    pub license_summary: LicenseSummary,
    pub assessment: OpennessAssessment,
    pub record_set: Vec<RecordSet>,
    pub sources: Vec<SourcePointer>,
}

fn field(name: &str, data_type: &str, description: &str) -> Field {
    Field {
        name: name.into(),
        data_type: data_type.into(),
        description: description.into(),
    }
}

fn document_record_set() -> RecordSet {
    RecordSet {
        name: "documents".into(),
        description: "One JSON object per line in documents/*.jsonl".into(),
        field: vec![
            field("doc_id", "sc:Text", "SHA-256 of the newline-normalized text, lowercase hex"),
            field("source_url", "sc:URL", "Where the document was acquired"),
            field("text", "sc:Text", "Extracted plain text"),
            field("provenance", "cr:RecordSet", "URL, crawl date, HTTP headers, HTML metadata, acquisition method, configuration hash"),
            field("licenses", "cr:RecordSet", "License detections with verbatim evidence and byte offsets"),
            field("signals", "cr:RecordSet", "Preference signals observed for the document"),
            field("flags", "sc:Text", "Screening flags"),
            field("pd_classification", "cr:RecordSet", "Public-domain classification, when present"),
        ],
    }
}

/// Builds metadata for a sealed release. `docs` are its documents still in
/// the store; `superseded_by` lists the ids of releases whose parent it is.
pub fn emit_metadata(
    m: &ReleaseManifest,
    config: &PipelineConfig,
    docs: &[DocumentRecord],
    superseded_by: Vec<String>,
) -> Result<ReleaseMetadata> {
    m.require_sealed()?;
    Ok(ReleaseMetadata {
        context: serde_json::json!({
            "@vocab": "https://schema.org/",
            "sc": "https://schema.org/",
            "cr": "http://mlcommons.org/croissant/"
        }),
        kind: "sc:Dataset".into(),
        schema_version: METADATA_SCHEMA.into(),
        name: config.release.dataset_name.clone(),
        version: m.label.clone(),
        release_id: m.release_id.clone(),
        date_published: m.created_at.to_rfc3339(),
        parent: m.parent.clone(),
        deprecated: !superseded_by.is_empty(),
        superseded_by,
        config_hash: m.config_hash.clone(),
        document_count: m.doc_ids.len(),
        dataset_license: m.dataset_license.as_ref().map(|l| l.spdx_id.clone()),
        license_summary: license_summary(docs, m.doc_ids.len()),
        assessment: m.assessment,
        record_set: vec![document_record_set()],
        sources: source_breakdown(docs)
            .into_iter()
            .map(|((origin, acquisition_method), documents)| SourcePointer {
                origin,
                acquisition_method,
                documents,
            })
            .collect(),
    })
}

impl ReleaseMetadata {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("serializable metadata");
        out.push(b'\n');
        out
    }
}
