//! Staged registration-to-renewal matching.
//!
//! Stage 1 matches normalized registration ids, stage 2 exact normalized
//! title and author, stage 3 fuzzy titles. A fuzzy candidate can only be
//! confirmed inside the renewal window; outside it the candidate is kept as
//! ambiguous so that a wrong publication date cannot hide a renewal. Every
//! pair is scored by [`evaluate_pair`]; the index only prunes pairs that
//! cannot produce a candidate, so its output equals exhaustive pairwise
//! scoring.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::{MatchResult, MatchStage, MatchStatus, NormalizedRegistration, NormalizedRenewal};

/// Tolerance for threshold comparisons on similarity scores.
pub const SCORE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchConfig {
    /// Minimum title similarity for a fuzzy candidate.
    pub threshold: f64,
    /// Width of the ambiguity band above the threshold.
    pub ambiguity_band: f64,
    /// Accepted gap in years between publication and renewal.
    pub renewal_window_years: (i32, i32),
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            threshold: 0.85,
            ambiguity_band: 0.05,
            renewal_window_years: (19, 29),
        }
    }
}

/// Normalized edit-distance similarity in [0, 1].
pub fn title_similarity(a: &str, b: &str) -> f64 {
    strsim::normalized_levenshtein(a, b)
}

/// A scored pair before status resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub renewal: usize,
    pub stage: MatchStage,
    pub score: f64,
    pub title_similarity: f64,
    pub date_window_ok: bool,
}

fn window_ok(reg: &NormalizedRegistration, ren: &NormalizedRenewal, config: &MatchConfig) -> bool {
    reg.record.pub_year().is_some_and(|year| {
        let gap = ren.record.renewal_date.year - year;
        (config.renewal_window_years.0..=config.renewal_window_years.1).contains(&gap)
    })
}

/// Scores one registration/renewal pair, returning the earliest stage that
/// applies.
pub fn evaluate_pair(
    reg: &NormalizedRegistration,
    ren: &NormalizedRenewal,
    renewal_index: usize,
    config: &MatchConfig,
) -> Option<Candidate> {
    let date_window_ok = window_ok(reg, ren, config);
    let same_id = !reg.reg_id_norm.is_empty() && ren.reg_id_norm.as_deref() == Some(reg.reg_id_norm.as_str());
    let exact_title_author =
        !reg.title_norm.is_empty() && reg.title_norm == ren.title_norm && reg.author_norm == ren.author_norm;
    let similarity = title_similarity(&reg.title_norm, &ren.title_norm);
    let (stage, score) = if same_id {
        (MatchStage::RegIdExact, 1.0)
    } else if exact_title_author {
        (MatchStage::TitleAuthorExact, 1.0)
    } else if !reg.title_norm.is_empty() && similarity + SCORE_EPSILON >= config.threshold {
        (MatchStage::Fuzzy, similarity)
    } else {
        return None;
    };
    Some(Candidate {
        renewal: renewal_index,
        stage,
        score,
        title_similarity: similarity,
        date_window_ok,
    })
}

/// Assigns confirmed/ambiguous status to one registration's candidates.
pub fn resolve_candidates(
    reg: &NormalizedRegistration,
    mut candidates: Vec<Candidate>,
    renewals: &[NormalizedRenewal],
    config: &MatchConfig,
) -> Vec<MatchResult> {
    let confirm_at = config.threshold + config.ambiguity_band;
    let fuzzy_scores: Vec<f64> = candidates
        .iter()
        .filter(|c| c.stage == MatchStage::Fuzzy)
        .map(|c| c.score)
        .collect();
    candidates.sort_by(|a, b| {
        a.stage
            .cmp(&b.stage)
            .then_with(|| renewals[a.renewal].record.renewal_id.cmp(&renewals[b.renewal].record.renewal_id))
    });
    candidates
        .into_iter()
        .map(|c| {
            let confirmed = match c.stage {
                MatchStage::RegIdExact => c.title_similarity + SCORE_EPSILON >= config.threshold,
                MatchStage::TitleAuthorExact => true,
                MatchStage::Fuzzy => {
                    let rivals = fuzzy_scores
                        .iter()
                        .filter(|&&other| other + config.ambiguity_band > c.score + SCORE_EPSILON)
                        .count();
                    // `rivals` counts the candidate itself.
                    c.date_window_ok && c.score + SCORE_EPSILON >= confirm_at && rivals == 1
                }
            };
            MatchResult {
                registration: reg.key.clone(),
                renewal: renewals[c.renewal].record.renewal_id.clone(),
                stage: c.stage,
                score: c.score,
                title_similarity: c.title_similarity,
                date_window_ok: c.date_window_ok,
                status: if confirmed {
                    MatchStatus::Confirmed
                } else {
                    MatchStatus::Ambiguous
                },
            }
        })
        .collect()
}

/// Read-only lookup structure over renewals. Built once, then shared by
/// parallel matchers.
pub struct RenewalIndex {
    renewals: Vec<NormalizedRenewal>,
    by_reg_id: HashMap<String, Vec<usize>>,
    by_title_author: HashMap<(String, String), Vec<usize>>,
    /// normalized title length in chars -> renewal indices
    by_title_len: BTreeMap<usize, Vec<usize>>,
}

impl RenewalIndex {
    pub fn build(renewals: Vec<NormalizedRenewal>) -> Self {
        let mut by_reg_id: HashMap<String, Vec<usize>> = HashMap::new();
        let mut by_title_author: HashMap<(String, String), Vec<usize>> = HashMap::new();
        let mut by_title_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, ren) in renewals.iter().enumerate() {
            if let Some(id) = &ren.reg_id_norm {
                by_reg_id.entry(id.clone()).or_default().push(i);
            }
            by_title_author
                .entry((ren.title_norm.clone(), ren.author_norm.clone()))
                .or_default()
                .push(i);
            by_title_len.entry(ren.title_norm.chars().count()).or_default().push(i);
        }
        RenewalIndex {
            renewals,
            by_reg_id,
            by_title_author,
            by_title_len,
        }
    }

    pub fn renewals(&self) -> &[NormalizedRenewal] {
        &self.renewals
    }

    fn candidate_indices(&self, reg: &NormalizedRegistration, config: &MatchConfig) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        if let Some(ids) = self.by_reg_id.get(&reg.reg_id_norm) {
            out.extend(ids);
        }
        if let Some(ids) = self
            .by_title_author
            .get(&(reg.title_norm.clone(), reg.author_norm.clone()))
        {
            out.extend(ids);
        }
        let len = reg.title_norm.chars().count();
        if len == 0 {
            return out;
        }
        let slack = 1.0 - config.threshold;
        for (&other_len, entries) in &self.by_title_len {
            let longest = len.max(other_len) as f64;
            // Edit distance is at least the length difference.
            if (len.abs_diff(other_len) as f64) <= slack * longest + SCORE_EPSILON {
                out.extend(entries);
            }
        }
        out
    }

    pub fn match_one(&self, reg: &NormalizedRegistration, config: &MatchConfig) -> Vec<MatchResult> {
        let candidates = self
            .candidate_indices(reg, config)
            .into_iter()
            .filter_map(|i| evaluate_pair(reg, &self.renewals[i], i, config))
            .collect();
        resolve_candidates(reg, candidates, &self.renewals, config)
    }
}

/// Matches every registration against the renewal set. Results are aligned
/// with `registrations`.
pub fn match_renewals(
    registrations: &[NormalizedRegistration],
    renewals: Vec<NormalizedRenewal>,
    config: &MatchConfig,
) -> Vec<Vec<MatchResult>> {
    let index = RenewalIndex::build(renewals);
    registrations
        .par_iter()
        .map(|reg| index.match_one(reg, config))
        .collect()
}
