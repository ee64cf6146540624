use std::collections::BTreeMap;
use std::sync::LazyLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::{canonical_json_hash, is_hex_digest, sha256_hex};
use crate::provenance::{LicenseTag, OpennessAssessment};

pub const MANIFEST_FORMAT: u32 = 1;

static LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^v?\d+(\.\d+){0,2}(-[0-9A-Za-z][0-9A-Za-z.-]*)?$").unwrap());

/// Checks a semver-style version label such as `v1`, `1.2.0` or `v2.0-rc.1`.
pub fn validate_label(label: &str) -> Result<()> {
    if LABEL.is_match(label) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("`{label}` is not a version label like v1 or 1.2.0")))
    }
}

/// Content address of a release: its sorted documents, its parent and the
/// configuration that produced it.
pub fn compute_release_id(doc_ids: &[String], parent: Option<&str>, config_hash: &str) -> String {
    let mut buf = String::new();
    for id in doc_ids {
        buf.push_str(id);
        buf.push('\n');
    }
    buf.push_str("parent:");
    buf.push_str(parent.unwrap_or(""));
    buf.push_str("\nconfig:");
    buf.push_str(config_hash);
    sha256_hex(buf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReleaseManifest {
    pub format_version: u32,
    pub release_id: String,
    pub label: String,
    /// Store-wide sequence number; orders releases against tombstones.
    pub seq: u64,
    pub created_at: DateTime<Utc>,
    pub parent: Option<String>,
    pub config_hash: String,
    pub doc_ids: Vec<String>,
    /// Parent documents left out because they were removed.
    pub tombstones_applied: Vec<String>,
    pub dataset_license: Option<LicenseTag>,
    pub assessment: OpennessAssessment,
    /// Document counts per pipeline stage, as reported by earlier runs.
    pub pipeline_counts: BTreeMap<String, u64>,
    pub datasheet_ref: String,
    /// Digest of the manifest's canonical JSON with this field empty.
    pub seal: String,
}

impl ReleaseManifest {
    fn seal_digest(&self) -> String {
        let mut unsealed = self.clone();
        unsealed.seal.clear();
        canonical_json_hash(&unsealed)
    }

    pub fn seal(&mut self) {
        self.seal = self.seal_digest();
    }

    pub fn is_sealed(&self) -> bool {
        !self.seal.is_empty() && self.seal == self.seal_digest()
    }

    pub fn require_sealed(&self) -> Result<()> {
        if self.is_sealed() {
            Ok(())
        } else {
            Err(Error::InvalidState(format!("release `{}` is not sealed", self.label)))
        }
    }

    /// Stored form: pretty JSON with a trailing newline.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("serializable manifest");
        out.push(b'\n');
        out
    }

    /// Every way the manifest disagrees with its own contents.
    pub fn integrity_problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.format_version != MANIFEST_FORMAT {
            problems.push(format!("unknown format version {}", self.format_version));
        }
        if !self.doc_ids.windows(2).all(|w| w[0] < w[1]) {
            problems.push("doc_ids are not sorted and unique".into());
        }
        if let Some(bad) = self.doc_ids.iter().find(|d| !is_hex_digest(d)) {
            problems.push(format!("doc_id `{bad}` is not a lowercase hex digest"));
        }
        let expected = compute_release_id(&self.doc_ids, self.parent.as_deref(), &self.config_hash);
        if expected != self.release_id {
            problems.push(format!("release_id does not match contents (expected {expected})"));
        }
        if !self.is_sealed() {
            problems.push("seal does not match contents".into());
        }
        problems
    }

    /// Parses stored bytes and checks that they are exactly the canonical
    /// serialization of a self-consistent manifest.
    pub fn verify_bytes(bytes: &[u8]) -> std::result::Result<ReleaseManifest, Vec<String>> {
        let manifest: ReleaseManifest =
            serde_json::from_slice(bytes).map_err(|e| vec![format!("manifest does not parse: {e}")])?;
        let mut problems = manifest.integrity_problems();
        if manifest.to_bytes() != bytes {
            problems.push("manifest bytes are not in canonical form".into());
        }
        if problems.is_empty() {
            Ok(manifest)
        } else {
            Err(problems)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provenance::assess_tier;

    pub(crate) fn sample() -> ReleaseManifest {
        let doc_ids = vec![sha256_hex("a"), sha256_hex("b")];
        let mut doc_ids = doc_ids;
        doc_ids.sort();
        let config_hash = sha256_hex("cfg");
        let mut m = ReleaseManifest {
            format_version: MANIFEST_FORMAT,
            release_id: compute_release_id(&doc_ids, None, &config_hash),
            label: "v1".into(),
            seq: 1,
            created_at: "2024-01-01T00:00:00Z".parse().unwrap(),
            parent: None,
            config_hash,
            doc_ids,
            tombstones_applied: vec![],
            dataset_license: None,
            assessment: assess_tier(true, true, true),
            pipeline_counts: BTreeMap::new(),
            datasheet_ref: "datasheets/x.md".into(),
            seal: String::new(),
        };
        m.seal();
        m
    }

    #[test]
    fn labels() {
        for ok in ["v1", "1.2.0", "v2.0-rc.1", "v10.3"] {
            validate_label(ok).unwrap();
        }
        for bad in ["", "latest", "v1.2.3.4", "v-1"] {
            assert!(validate_label(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn round_trip_verifies() {
        let m = sample();
        assert!(m.integrity_problems().is_empty());
        assert_eq!(ReleaseManifest::verify_bytes(&m.to_bytes()).unwrap(), m);
    }

    #[test]
    fn every_single_byte_flip_is_caught() {
        let bytes = sample().to_bytes();
        for i in 0..bytes.len() {
            let mut t = bytes.clone();
            t[i] ^= 0x01;
            assert!(ReleaseManifest::verify_bytes(&t).is_err(), "flip at {i} undetected");
        }
    }

    #[test]
    fn release_id_depends_on_parent_and_config() {
        let ids = vec![sha256_hex("a")];
        let base = compute_release_id(&ids, None, "c");
        assert_ne!(base, compute_release_id(&ids, Some("p"), "c"));
        assert_ne!(base, compute_release_id(&ids, None, "d"));
        assert_eq!(base, compute_release_id(&ids, None, "c"));
    }
}
