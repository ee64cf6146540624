//! Human-readable datasheet for a sealed release.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::manifest::ReleaseManifest;
use crate::config::PipelineConfig;
use crate::error::Result;
use crate::preference::origin_of;
use crate::provenance::{DocumentRecord, LicenseTable};
use crate::scanner::html::EXTRACTOR_VERSION;
use crate::scanner::sensitive::patterns_version;
use crate::scanner::RuleId;

/// License composition of a set of documents.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LicenseSummary {
    /// Documents per detected license id. A document with several distinct
    /// licenses counts once under each.
    pub distribution: BTreeMap<String, u64>,
    pub public_domain: PublicDomainBucket,
    pub multi_license_documents: u64,
    /// Listed in the release but since removed from the store.
    pub removed_documents: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicDomainBucket {
    pub documents: u64,
    pub basis: BTreeMap<String, u64>,
}

pub fn license_summary(docs: &[DocumentRecord], release_size: usize) -> LicenseSummary {
    let mut s = LicenseSummary::default();
    for d in docs {
        let ids = d.distinct_license_ids();
        if ids.len() > 1 {
            s.multi_license_documents += 1;
        }
        for id in ids {
            *s.distribution.entry(id.to_string()).or_default() += 1;
        }
        if d.is_public_domain() {
            s.public_domain.documents += 1;
            let basis = d.pd_classification.as_ref().expect("public domain has a classification").basis;
            *s.public_domain.basis.entry(basis.as_str().to_string()).or_default() += 1;
        }
    }
    s.removed_documents = release_size.saturating_sub(docs.len()) as u64;
    s
}

/// Documents per (origin, acquisition method).
pub fn source_breakdown(docs: &[DocumentRecord]) -> BTreeMap<(String, String), u64> {
    let mut out = BTreeMap::new();
    for d in docs {
        let origin = origin_of(&d.source_url).unwrap_or_else(|| d.source_url.clone());
        *out.entry((origin, d.provenance.acquisition_method.as_str().to_string())).or_default() += 1;
    }
    out
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn number(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v}")
    }
}

/// Renders the datasheet. `docs` are the release's documents still in the
/// store.
pub fn render_datasheet(m: &ReleaseManifest, config: &PipelineConfig, docs: &[DocumentRecord]) -> Result<String> {
    m.require_sealed()?;
    let rel = &config.release;
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "# Datasheet: {} {}", rel.dataset_name, m.label).unwrap();
    writeln!(w).unwrap();
    writeln!(w, "- Release id: `{}`", m.release_id).unwrap();
    writeln!(w, "- Parent release: {}", m.parent.as_deref().map_or("none".to_string(), |p| format!("`{p}`"))).unwrap();
    writeln!(w, "- Created: {}", m.created_at.to_rfc3339()).unwrap();
    writeln!(w, "- Documents: {}", m.doc_ids.len()).unwrap();
    writeln!(w, "- Pipeline configuration hash: `{}`", m.config_hash).unwrap();
    writeln!(w).unwrap();

    writeln!(w, "## Sources").unwrap();
    writeln!(w).unwrap();
    writeln!(w, "| Origin | Acquisition method | Documents |").unwrap();
    writeln!(w, "|---|---|---|").unwrap();
    for ((origin, method), n) in source_breakdown(docs) {
        writeln!(w, "| {origin} | {method} | {n} |").unwrap();
    }
    let summary = license_summary(docs, m.doc_ids.len());
    if summary.removed_documents > 0 {
        writeln!(w).unwrap();
        writeln!(w, "{} documents of this release have since been removed.", summary.removed_documents).unwrap();
    }
    writeln!(w).unwrap();

    writeln!(w, "## Filtering").unwrap();
    writeln!(w).unwrap();
    writeln!(w, "### Quality rules").unwrap();
    writeln!(w).unwrap();
    writeln!(w, "| Rule | Threshold | Default | Rationale |").unwrap();
    writeln!(w, "|---|---|---|---|").unwrap();
    for rule in RuleId::ALL {
        let default = rule.default_threshold();
        let threshold = match config.scan.quality.threshold(rule) {
            None => "disabled (overridden)".to_string(),
            Some(t) if t == default => number(t),
            Some(t) => format!("{} (overridden)", number(t)),
        };
        writeln!(w, "| {rule} | {threshold} | {} | {} |", number(default), rule.rationale()).unwrap();
    }
    writeln!(w).unwrap();
    writeln!(w, "### Other scan settings").unwrap();
    writeln!(w).unwrap();
    writeln!(w, "- Pages without a license detection kept: {}", yes_no(config.scan.keep_undetected)).unwrap();
    writeln!(w, "- Pages failing a quality rule kept: {}", yes_no(config.scan.keep_quality_rejected)).unwrap();
    writeln!(w, "- Emails and phone numbers redacted: {} (flagged either way)", yes_no(config.scan.redact)).unwrap();
    writeln!(w, "- License table version: {}", LicenseTable::builtin().version()).unwrap();
    writeln!(w, "- Sensitive-data patterns version: {}", patterns_version()).unwrap();
    writeln!(w, "- Text extractor: {EXTRACTOR_VERSION}").unwrap();
    writeln!(w, "- robots.txt user agent: {}", config.gate.user_agent).unwrap();
    writeln!(w).unwrap();
    writeln!(w, "### Public-domain rules").unwrap();
    writeln!(w).unwrap();
    let pd = &config.pd;
    writeln!(w, "- Published in or before {}: public domain by age", pd.rules.pre_cutoff_year).unwrap();
    writeln!(
        w,
        "- Published {}-{}: public domain only when no renewal is found",
        pd.rules.renewal_rule_years.0, pd.rules.renewal_rule_years.1
    )
    .unwrap();
    writeln!(
        w,
        "- Renewal window: {}-{} years after publication",
        pd.matching.renewal_window_years.0, pd.matching.renewal_window_years.1
    )
    .unwrap();
    writeln!(
        w,
        "- Title similarity threshold {} with ambiguity band {}",
        pd.matching.threshold, pd.matching.ambiguity_band
    )
    .unwrap();
    writeln!(w).unwrap();

    writeln!(w, "## Pipeline counts").unwrap();
    writeln!(w).unwrap();
    if m.pipeline_counts.is_empty() {
        writeln!(w, "No stage counts were recorded for this release.").unwrap();
    } else {
        writeln!(w, "| Stage | Count |").unwrap();
        writeln!(w, "|---|---|").unwrap();
        for (stage, n) in &m.pipeline_counts {
            writeln!(w, "| {stage} | {n} |").unwrap();
        }
    }
    writeln!(w, "| released | {} |", m.doc_ids.len()).unwrap();
    writeln!(w).unwrap();

    writeln!(w, "## Licensing").unwrap();
    writeln!(w).unwrap();
    writeln!(w, "| License | Documents |").unwrap();
    writeln!(w, "|---|---|").unwrap();
    for (id, n) in &summary.distribution {
        writeln!(w, "| {id} | {n} |").unwrap();
    }
    if summary.public_domain.documents > 0 {
        writeln!(w, "| public domain | {} |", summary.public_domain.documents).unwrap();
        for (basis, n) in &summary.public_domain.basis {
            writeln!(w, "| public domain: {basis} | {n} |").unwrap();
        }
    }
    writeln!(w).unwrap();
    writeln!(w, "{} documents carry more than one distinct license.", summary.multi_license_documents).unwrap();
    writeln!(w).unwrap();

    let a = &m.assessment;
    writeln!(w, "## Openness").unwrap();
    writeln!(w).unwrap();
    writeln!(w, "Tier: {}", a.tier).unwrap();
    writeln!(w).unwrap();
    writeln!(w, "- [{}] Openly licensed (every constituent document)", if a.openly_licensed { "x" } else { " " }).unwrap();
    writeln!(w, "- [{}] Open access (operator attestation)", if a.open_access { "x" } else { " " }).unwrap();
    writeln!(w, "- [{}] Replicable (operator attestation)", if a.replicable { "x" } else { " " }).unwrap();
    writeln!(w).unwrap();
    match &m.dataset_license {
        Some(l) => writeln!(
            w,
            "Dataset-level license: {}. It covers the arrangement only and does not change the constituent assessment.",
            l.spdx_id
        )
        .unwrap(),
        None => writeln!(w, "No dataset-level license was declared.").unwrap(),
    }
    writeln!(w).unwrap();

    writeln!(w, "## Intended uses").unwrap();
    writeln!(w).unwrap();
    for u in &rel.intended_uses {
        writeln!(w, "- {u}").unwrap();
    }
    writeln!(w).unwrap();

    writeln!(w, "## Removal requests").unwrap();
    writeln!(w).unwrap();
    writeln!(
        w,
        "To ask for a document to be removed, contact {} with its URL, its text, or its doc_id.",
        rel.removal_contact
    )
    .unwrap();
    writeln!(
        w,
        "Anyone can check membership with `curator lookup --release {} --url <URL>`.",
        m.label
    )
    .unwrap();
    writeln!(
        w,
        "Removed documents are tombstoned: their text is deleted and every later release excludes them. Earlier releases are not rewritten."
    )
    .unwrap();
    if !m.tombstones_applied.is_empty() {
        writeln!(w).unwrap();
        writeln!(w, "{} documents of the parent release were left out after removal requests.", m.tombstones_applied.len()).unwrap();
    }
    Ok(out)
}
