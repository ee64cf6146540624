//! Export of works needing investigation and re-ingestion of manual
//! decisions on ambiguous matches.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::record::{CopyrightRecord, MatchResult, MatchStatus, PdBasis, PdOutcome, RenewalRecord};
use super::ClassifiedWork;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageCandidate {
    pub renewal: RenewalRecord,
    #[serde(rename = "match")]
    pub match_result: MatchResult,
}

/// One work awaiting a decision, with every candidate renewal beside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageEntry {
    pub registration_key: String,
    pub registration: CopyrightRecord,
    pub basis: PdBasis,
    pub candidates: Vec<TriageCandidate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    SameWork,
    DifferentWork,
}

/// A reviewer's ruling on one registration/renewal pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManualDecision {
    pub registration_key: String,
    pub renewal_id: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn triage_entries(works: &[ClassifiedWork], renewals: &[RenewalRecord]) -> Vec<TriageEntry> {
    let by_id: HashMap<&str, &RenewalRecord> = renewals.iter().map(|r| (r.renewal_id.as_str(), r)).collect();
    works
        .iter()
        .filter(|w| w.classification.outcome == PdOutcome::RequiresInvestigation)
        .map(|w| TriageEntry {
            registration_key: w.registration.key.clone(),
            registration: w.registration.record.clone(),
            basis: w.classification.basis,
            candidates: w
                .classification
                .evidence
                .iter()
                .filter_map(|m| {
                    by_id.get(m.renewal.as_str()).map(|r| TriageCandidate {
                        renewal: (*r).clone(),
                        match_result: m.clone(),
                    })
                })
                .collect(),
        })
        .collect()
}

pub fn write_triage<W: Write>(entries: &[TriageEntry], mut out: W) -> Result<()> {
    for e in entries {
        serde_json::to_writer(&mut out, e)?;
        writeln!(out).map_err(|err| Error::io("<triage output>", err))?;
    }
    Ok(())
}

/// Reads a JSONL decisions file. A pair decided twice with different
/// verdicts is an error.
pub fn read_decisions<R: BufRead>(input: R) -> Result<Vec<ManualDecision>> {
    let mut seen: BTreeMap<(String, String), Verdict> = BTreeMap::new();
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<decisions input>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let d: ManualDecision = serde_json::from_str(&line)
            .map_err(|e| Error::InvalidArgument(format!("decisions line {}: {e}", i + 1)))?;
        let pair = (d.registration_key.clone(), d.renewal_id.clone());
        match seen.get(&pair) {
            Some(v) if *v != d.verdict => {
                return Err(Error::InvalidArgument(format!(
                    "decisions line {}: conflicting verdict for {} / {}",
                    i + 1,
                    pair.0,
                    pair.1
                )))
            }
            Some(_) => continue,
            None => {
                seen.insert(pair, d.verdict);
                out.push(d);
            }
        }
    }
    Ok(out)
}

/// Applies decisions to a registration's matches: same-work confirms the
/// match, different-work removes it. Returns how many decisions applied.
pub fn apply_decisions(registration_key: &str, matches: &mut Vec<MatchResult>, decisions: &[ManualDecision]) -> usize {
    let mut applied = 0;
    for d in decisions.iter().filter(|d| d.registration_key == registration_key) {
        let before = matches.len();
        match d.verdict {
            Verdict::DifferentWork => matches.retain(|m| m.renewal != d.renewal_id),
            Verdict::SameWork => {
                for m in matches.iter_mut().filter(|m| m.renewal == d.renewal_id) {
                    m.status = MatchStatus::Confirmed;
                    applied += 1;
                }
            }
        }
        applied += before - matches.len();
    }
    applied
}
