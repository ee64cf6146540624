//! Public-domain classification of registered works from copyright
//! registration and renewal records.

mod classify;
mod estimate;
mod extractor;
mod ingest;
mod matcher;
mod normalize;
mod record;
mod triage;

use serde::{Deserialize, Serialize};

pub use classify::{classify, ClassifyRules};
pub use estimate::{estimate_misclassification, FieldAccuracyProfile, MisclassificationEstimate};
pub use extractor::evaluate_extractor;
pub use ingest::{ingest_registrations, ingest_renewals, IngestReport, InputFormat, RecordSchema, RejectedRow};
pub use matcher::{
    evaluate_pair, match_renewals, resolve_candidates, title_similarity, Candidate, MatchConfig, RenewalIndex,
    SCORE_EPSILON,
};
pub use normalize::{normalize_author, normalize_reg_id, normalize_title};
pub use record::{
    CopyrightRecord, MatchResult, MatchStage, MatchStatus, NormalizedRegistration, NormalizedRenewal, PartialDate,
    PdBasis, PdClassification, PdOutcome, RecordSource, RenewalRecord, MAX_YEAR, MIN_YEAR,
};
pub use triage::{
    apply_decisions, read_decisions, triage_entries, write_triage, ManualDecision, TriageCandidate, TriageEntry,
    Verdict,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedWork {
    pub registration: NormalizedRegistration,
    pub classification: PdClassification,
}

/// Matches, applies manual decisions, and classifies a corpus. Output is in
/// canonical order (normalized reg id, normalized title, key) regardless of
/// input order.
pub fn classify_corpus(
    registrations: Vec<NormalizedRegistration>,
    renewals: Vec<NormalizedRenewal>,
    match_config: &MatchConfig,
    rules: &ClassifyRules,
    decisions: &[ManualDecision],
) -> Vec<ClassifiedWork> {
    let mut registrations = registrations;
    registrations.sort_by(|a, b| {
        (&a.reg_id_norm, &a.title_norm, &a.key).cmp(&(&b.reg_id_norm, &b.title_norm, &b.key))
    });
    let matches = match_renewals(&registrations, renewals, match_config);
    registrations
        .into_iter()
        .zip(matches)
        .map(|(registration, mut matches)| {
            apply_decisions(&registration.key, &mut matches, decisions);
            let classification = classify(&registration, &matches, rules);
            ClassifiedWork {
                registration,
                classification,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub excluded: usize,
    pub requires_investigation: usize,
    pub believed_public_domain: usize,
}

impl OutcomeCounts {
    pub fn tally(works: &[ClassifiedWork]) -> Self {
        let mut c = OutcomeCounts::default();
        for w in works {
            match w.classification.outcome {
                PdOutcome::Excluded => c.excluded += 1,
                PdOutcome::RequiresInvestigation => c.requires_investigation += 1,
                PdOutcome::BelievedPublicDomain => c.believed_public_domain += 1,
            }
        }
        c
    }
}
