//! The single run configuration and its hash.
//!
//! The hash covers every setting that can change pipeline output plus the
//! versions of the shipped license table, sensitive-data patterns and text
//! extractor. File paths are not part of it.

use serde::{Deserialize, Serialize};

use crate::hash::canonical_json_hash;
use crate::pd::{ClassifyRules, MatchConfig};
use crate::provenance::LicenseTable;
use crate::scanner::html::EXTRACTOR_VERSION;
use crate::scanner::sensitive::patterns_version;
use crate::scanner::ScanConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateConfig {
    /// Product token evaluated against robots.txt groups.
    pub user_agent: String,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            user_agent: "curator".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdConfig {
    pub matching: MatchConfig,
    pub rules: ClassifyRules,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReleaseConfig {
    pub dataset_name: String,
    /// License on the dataset arrangement. Recorded, but it does not decide
    /// whether the constituents are openly licensed.
    pub dataset_license: Option<String>,
    /// Operator attestation: the data is freely downloadable.
    pub open_access: bool,
    /// Operator attestation: the documentation suffices to rebuild the data.
    pub replicable: bool,
    pub intended_uses: Vec<String>,
    pub removal_contact: String,
}

impl Default for ReleaseConfig {
    fn default() -> Self {
        ReleaseConfig {
            dataset_name: "curated-dataset".into(),
            dataset_license: None,
            open_access: false,
            replicable: false,
            intended_uses: vec!["language model pretraining research".into()],
            removal_contact: "the dataset maintainers".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub scan: ScanConfig,
    pub gate: GateConfig,
    pub pd: PdConfig,
    pub release: ReleaseConfig,
    /// Seed for randomized tooling such as fixture generation.
    pub seed: u64,
}

/// Exactly what [`PipelineConfig::hash`] digests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashedConfig {
    pub config: PipelineConfig,
    pub license_table_version: String,
    pub sensitive_patterns_version: String,
    pub extractor_version: String,
}

impl PipelineConfig {
    pub fn hashed(&self) -> HashedConfig {
        HashedConfig {
            config: self.clone(),
            license_table_version: LicenseTable::builtin().version().to_string(),
            sensitive_patterns_version: patterns_version().to_string(),
            extractor_version: EXTRACTOR_VERSION.to_string(),
        }
    }

    pub fn hash(&self) -> String {
        canonical_json_hash(&self.hashed())
    }
}
