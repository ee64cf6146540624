//! Brute-force reference implementations of matching and classification.
//! Every registration is compared with every renewal; nothing is indexed
//! or pruned, and edit distance is computed here rather than borrowed.

use crate::pd::{
    ClassifyRules, MatchConfig, MatchResult, MatchStage, MatchStatus, NormalizedRegistration, NormalizedRenewal,
    PdBasis, PdOutcome,
};

const EPS: f64 = 1e-9;

/// Character-level Levenshtein distance, full dynamic-programming table.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in table.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in table[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let substitution = table[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            table[i][j] = substitution.min(table[i - 1][j] + 1).min(table[i][j - 1] + 1);
        }
    }
    table[a.len()][b.len()]
}

/// `1 - distance / longer length`; two empty strings are identical.
pub fn similarity(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

fn in_window(reg: &NormalizedRegistration, ren: &NormalizedRenewal, cfg: &MatchConfig) -> bool {
    match reg.record.pub_date {
        Some(d) => {
            let gap = ren.record.renewal_date.year - d.year;
            gap >= cfg.renewal_window_years.0 && gap <= cfg.renewal_window_years.1
        }
        None => false,
    }
}

struct Pair<'a> {
    renewal: &'a NormalizedRenewal,
    stage: MatchStage,
    score: f64,
    similarity: f64,
    window: bool,
}

/// Matches one registration against every renewal.
pub fn match_registration(
    reg: &NormalizedRegistration,
    renewals: &[NormalizedRenewal],
    cfg: &MatchConfig,
) -> Vec<MatchResult> {
    let mut pairs: Vec<Pair<'_>> = Vec::new();
    for ren in renewals {
        let sim = similarity(&reg.title_norm, &ren.title_norm);
        let id_hit = match &ren.reg_id_norm {
            Some(id) => !reg.reg_id_norm.is_empty() && *id == reg.reg_id_norm,
            None => false,
        };
        let stage_score = if id_hit {
            Some((MatchStage::RegIdExact, 1.0))
        } else if !reg.title_norm.is_empty()
            && reg.title_norm == ren.title_norm
            && reg.author_norm == ren.author_norm
        {
            Some((MatchStage::TitleAuthorExact, 1.0))
        } else if !reg.title_norm.is_empty() && sim >= cfg.threshold - EPS {
            Some((MatchStage::Fuzzy, sim))
        } else {
            None
        };
        if let Some((stage, score)) = stage_score {
            pairs.push(Pair {
                renewal: ren,
                stage,
                score,
                similarity: sim,
                window: in_window(reg, ren, cfg),
            });
        }
    }

    let mut out: Vec<MatchResult> = Vec::with_capacity(pairs.len());
    for (i, p) in pairs.iter().enumerate() {
        let confirmed = match p.stage {
            MatchStage::RegIdExact => p.similarity >= cfg.threshold - EPS,
            MatchStage::TitleAuthorExact => true,
            MatchStage::Fuzzy => {
                let contested = pairs.iter().enumerate().any(|(j, q)| {
                    j != i && q.stage == MatchStage::Fuzzy && q.score + cfg.ambiguity_band > p.score + EPS
                });
                p.window && p.score >= cfg.threshold + cfg.ambiguity_band - EPS && !contested
            }
        };
        out.push(MatchResult {
            registration: reg.key.clone(),
            renewal: p.renewal.record.renewal_id.clone(),
            stage: p.stage,
            score: p.score,
            title_similarity: p.similarity,
            date_window_ok: p.window,
            status: if confirmed {
                MatchStatus::Confirmed
            } else {
                MatchStatus::Ambiguous
            },
        });
    }
    out.sort_by(|a, b| (a.stage, &a.renewal).cmp(&(b.stage, &b.renewal)));
    out
}

pub fn match_all(
    registrations: &[NormalizedRegistration],
    renewals: &[NormalizedRenewal],
    cfg: &MatchConfig,
) -> Vec<Vec<MatchResult>> {
    registrations
        .iter()
        .map(|r| match_registration(r, renewals, cfg))
        .collect()
}

/// Reference decision table.
pub fn classify(reg: &NormalizedRegistration, matches: &[MatchResult], rules: &ClassifyRules) -> (PdOutcome, PdBasis) {
    let confirmed = matches.iter().filter(|m| m.status == MatchStatus::Confirmed).count();
    let ambiguous = matches.len() - confirmed;
    let Some(year) = reg.record.pub_date.map(|d| d.year) else {
        return (PdOutcome::RequiresInvestigation, PdBasis::MissingPubDate);
    };
    let old = year <= rules.pre_cutoff_year;
    let in_rule = year >= rules.renewal_rule_years.0 && year <= rules.renewal_rule_years.1;
    match (old || in_rule, confirmed > 0, ambiguous > 0) {
        (false, _, _) => (PdOutcome::Excluded, PdBasis::OutOfRuleRange),
        (true, true, _) => (PdOutcome::Excluded, PdBasis::RenewalFound),
        (true, false, true) => (PdOutcome::RequiresInvestigation, PdBasis::AmbiguousMatch),
        (true, false, false) if old => (PdOutcome::BelievedPublicDomain, PdBasis::PreCutoffYear),
        (true, false, false) => (PdOutcome::BelievedPublicDomain, PdBasis::NoRenewalFound),
    }
}
