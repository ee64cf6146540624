//! Shared data model: documents, provenance, licenses and openness tiers.

mod license;
mod record;
mod tier;

pub use license::{
    normalize_license, normalize_license_with_version, LicenseEntry, LicenseFamily, LicenseTable,
    LicenseTag,
};
pub use record::{
    AcquisitionMethod, DetectionMethod, DocumentRecord, Evidence, LicenseDetection, NameValue,
    ProvenanceRecord, ScopeConfidence, ScreeningFlag, SyntheticOrigin,
};
pub use tier::{
    aggregate_constituent_licensing, aggregate_with_table, assess_tier, is_constituent_open,
    OpennessAssessment, Tier,
};
