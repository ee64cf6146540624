use serde::{Deserialize, Serialize};

use super::record::{MatchResult, MatchStatus, NormalizedRegistration, PdBasis, PdClassification, PdOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyRules {
    /// Works published in or before this year are public domain by age.
    pub pre_cutoff_year: i32,
    /// Publication years for which an unrenewed registration lapsed.
    pub renewal_rule_years: (i32, i32),
}

impl Default for ClassifyRules {
    fn default() -> Self {
        ClassifyRules {
            pre_cutoff_year: 1928,
            renewal_rule_years: (1929, 1964),
        }
    }
}

/// Three-way public-domain decision for one registration.
///
/// A confirmed renewal always excludes the work, and any ambiguous match
/// sends it to investigation, including works old enough to be public
/// domain by publication year alone.
pub fn classify(
    registration: &NormalizedRegistration,
    matches: &[MatchResult],
    rules: &ClassifyRules,
) -> PdClassification {
    let decide = |outcome, basis| PdClassification {
        outcome,
        basis,
        evidence: matches.to_vec(),
    };
    let Some(year) = registration.record.pub_year() else {
        return decide(PdOutcome::RequiresInvestigation, PdBasis::MissingPubDate);
    };
    let pre_cutoff = year <= rules.pre_cutoff_year;
    let (lo, hi) = rules.renewal_rule_years;
    if !pre_cutoff && !(lo..=hi).contains(&year) {
        return decide(PdOutcome::Excluded, PdBasis::OutOfRuleRange);
    }
    if matches.iter().any(|m| m.status == MatchStatus::Confirmed) {
        return decide(PdOutcome::Excluded, PdBasis::RenewalFound);
    }
    if matches.iter().any(|m| m.status == MatchStatus::Ambiguous) {
        return decide(PdOutcome::RequiresInvestigation, PdBasis::AmbiguousMatch);
    }
    if pre_cutoff {
        decide(PdOutcome::BelievedPublicDomain, PdBasis::PreCutoffYear)
    } else {
        decide(PdOutcome::BelievedPublicDomain, PdBasis::NoRenewalFound)
    }
}
