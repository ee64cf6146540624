use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::license::LicenseTag;
use crate::error::{Error, Result};
use crate::hash::{doc_id_for_text, normalize_newlines};
use crate::pd::{PdClassification, PdOutcome};
use crate::preference::PreferenceSignal;

/// A captured header or metadata pair, kept exactly as observed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameValue {
    pub name: String,
    pub value: String,
}

impl NameValue {
    pub fn new(name: impl Into<String>, value: impl Into<String>) -> Self {
        NameValue {
            name: name.into(),
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcquisitionMethod {
    WarcCrawl,
    BulkDownload,
    ManualIngest,
}

impl AcquisitionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            AcquisitionMethod::WarcCrawl => "warc-crawl",
            AcquisitionMethod::BulkDownload => "bulk-download",
            AcquisitionMethod::ManualIngest => "manual-ingest",
        }
    }
}

/// Generation context, present only for synthetic text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticOrigin {
    pub generator_model_name: String,
    pub prompt_reference: String,
    pub seed_data_reference: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub source_url: String,
    pub crawl_date: DateTime<Utc>,
    pub http_headers: Vec<NameValue>,
    pub html_metadata: Vec<NameValue>,
    pub acquisition_method: AcquisitionMethod,
    pub pipeline_config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticOrigin>,
}

impl ProvenanceRecord {
    /// Record with no captured headers or metadata.
    pub fn new(
        source_url: impl Into<String>,
        crawl_date: DateTime<Utc>,
        acquisition_method: AcquisitionMethod,
        pipeline_config_hash: impl Into<String>,
    ) -> Self {
        ProvenanceRecord {
            source_url: source_url.into(),
            crawl_date,
            http_headers: Vec::new(),
            html_metadata: Vec::new(),
            acquisition_method,
            pipeline_config_hash: pipeline_config_hash.into(),
            synthetic: None,
        }
    }

    /// Checks that the content was captured no later than `ingested_at`.
    pub fn check_crawl_date(&self, ingested_at: DateTime<Utc>) -> Result<()> {
        if self.crawl_date > ingested_at {
            return Err(Error::InvalidArgument(format!(
                "crawl date {} is after ingestion time {}",
                self.crawl_date, ingested_at
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionMethod {
    RelLicenseLink,
    CcUrlRegex,
    MetaTag,
    DeclaredBySource,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScopeConfidence {
    PageLevel,
    AssetLevelUncertain,
}

impl DetectionMethod {
    /// Link- and URL-based detections cannot be bound to a specific asset
    /// on the page.
    pub fn scope_confidence(self) -> ScopeConfidence {
        match self {
            DetectionMethod::RelLicenseLink | DetectionMethod::CcUrlRegex => {
                ScopeConfidence::AssetLevelUncertain
            }
            _ => ScopeConfidence::PageLevel,
        }
    }
}

/// Verbatim snippet of the scanned input and where it was found.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Evidence {
    pub snippet: String,
    /// Byte offset of `snippet` in the scanned input.
    pub offset: usize,
    /// Digest of the scanned input the offset refers to.
    pub input_digest: String,
}

impl Evidence {
    pub fn verify_against(&self, input: &str) -> bool {
        input
            .get(self.offset..self.offset.saturating_add(self.snippet.len()))
            .is_some_and(|s| s == self.snippet)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "DetectionFields")]
pub struct LicenseDetection {
    tag: LicenseTag,
    method: DetectionMethod,
    evidence: Evidence,
    scope_confidence: ScopeConfidence,
}

#[derive(Deserialize)]
struct DetectionFields {
    tag: LicenseTag,
    method: DetectionMethod,
    evidence: Evidence,
    scope_confidence: ScopeConfidence,
}

impl TryFrom<DetectionFields> for LicenseDetection {
    type Error = String;

    fn try_from(f: DetectionFields) -> std::result::Result<Self, String> {
        if f.method.scope_confidence() == ScopeConfidence::AssetLevelUncertain
            && f.scope_confidence != ScopeConfidence::AssetLevelUncertain
        {
            return Err(format!(
                "{:?} detections must be asset-level-uncertain",
                f.method
            ));
        }
        Ok(LicenseDetection {
            tag: f.tag,
            method: f.method,
            evidence: f.evidence,
            scope_confidence: f.scope_confidence,
        })
    }
}

impl LicenseDetection {
    pub fn new(tag: LicenseTag, method: DetectionMethod, evidence: Evidence) -> Self {
        LicenseDetection {
            tag,
            method,
            evidence,
            scope_confidence: method.scope_confidence(),
        }
    }

    /// Detection for a license declared alongside the content, e.g. in a
    /// source's API metadata. The declaration itself is the scanned input.
    pub fn declared(tag: LicenseTag, declaration: &str) -> Self {
        LicenseDetection::new(
            tag,
            DetectionMethod::DeclaredBySource,
            Evidence {
                snippet: declaration.to_string(),
                offset: 0,
                input_digest: crate::hash::sha256_hex(declaration),
            },
        )
    }

    pub fn tag(&self) -> &LicenseTag {
        &self.tag
    }

    pub fn method(&self) -> DetectionMethod {
        self.method
    }

    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    pub fn scope_confidence(&self) -> ScopeConfidence {
        self.scope_confidence
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScreeningFlag {
    SensitiveDataFound,
    SensitiveDataRedacted,
    QualityRejected,
    LicenseAmbiguous,
}

/// One candidate training document with its provenance and licensing
/// evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub source_url: String,
    pub text: String,
    pub provenance: ProvenanceRecord,
    pub licenses: Vec<LicenseDetection>,
    pub signals: Vec<PreferenceSignal>,
    pub flags: BTreeSet<ScreeningFlag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pd_classification: Option<PdClassification>,
}

impl DocumentRecord {
    /// Builds a record, normalizing newlines and deriving `doc_id` from the
    /// text.
    pub fn new(text: &str, provenance: ProvenanceRecord) -> Self {
        let text = normalize_newlines(text).into_owned();
        DocumentRecord {
            doc_id: doc_id_for_text(&text),
            source_url: provenance.source_url.clone(),
            text,
            provenance,
            licenses: Vec::new(),
            signals: Vec::new(),
            flags: BTreeSet::new(),
            pd_classification: None,
        }
    }

    pub fn with_licenses(mut self, licenses: Vec<LicenseDetection>) -> Self {
        self.licenses = licenses;
        if self.distinct_license_ids().len() > 1 {
            self.flags.insert(ScreeningFlag::LicenseAmbiguous);
        }
        self
    }

    pub fn with_pd_classification(mut self, classification: PdClassification) -> Self {
        self.pd_classification = Some(classification);
        self
    }

    pub fn verify_id(&self) -> bool {
        self.doc_id == doc_id_for_text(&self.text)
    }

    pub fn distinct_license_ids(&self) -> BTreeSet<&str> {
        self.licenses.iter().map(|d| d.tag().spdx_id.as_str()).collect()
    }

    pub fn is_public_domain(&self) -> bool {
        self.pd_classification
            .as_ref()
            .is_some_and(|c| c.outcome == PdOutcome::BelievedPublicDomain)
    }

    /// Release precondition: at least one license detection or a
    /// public-domain classification.
    pub fn has_licensing_evidence(&self) -> bool {
        !self.licenses.is_empty() || self.is_public_domain()
    }
}
