//! Text quality heuristics applied after extraction.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleId {
    MinWordCount,
    MaxBulletLineFraction,
    MaxDuplicateLineFraction,
    MinAlphaFraction,
}

impl RuleId {
    pub const ALL: [RuleId; 4] = [
        RuleId::MinWordCount,
        RuleId::MaxBulletLineFraction,
        RuleId::MaxDuplicateLineFraction,
        RuleId::MinAlphaFraction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::MinWordCount => "min-word-count",
            RuleId::MaxBulletLineFraction => "max-bullet-line-fraction",
            RuleId::MaxDuplicateLineFraction => "max-duplicate-line-fraction",
            RuleId::MinAlphaFraction => "min-alpha-fraction",
        }
    }

    pub fn default_threshold(self) -> f64 {
        match self {
            RuleId::MinWordCount => 50.0,
            RuleId::MaxBulletLineFraction => 0.9,
            RuleId::MaxDuplicateLineFraction => 0.5,
            RuleId::MinAlphaFraction => 0.6,
        }
    }

    /// One-line statement of what the rule removes, for datasheets.
    pub fn rationale(self) -> &'static str {
        match self {
            RuleId::MinWordCount => "drops fragments too short to carry running prose",
            RuleId::MaxBulletLineFraction => "drops navigation menus and link lists made mostly of bullets",
            RuleId::MaxDuplicateLineFraction => "drops boilerplate pages dominated by repeated lines",
            RuleId::MinAlphaFraction => "drops tables, code dumps and symbol noise with little natural language",
        }
    }

    fn passes(self, value: f64, threshold: f64) -> bool {
        match self {
            RuleId::MinWordCount | RuleId::MinAlphaFraction => value >= threshold,
            RuleId::MaxBulletLineFraction | RuleId::MaxDuplicateLineFraction => value <= threshold,
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Enabled rules and their thresholds. A rule absent from the map is
/// disabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QualityRules(pub BTreeMap<RuleId, f64>);

impl Default for QualityRules {
    fn default() -> Self {
        QualityRules(RuleId::ALL.iter().map(|&r| (r, r.default_threshold())).collect())
    }
}

impl QualityRules {
    pub fn threshold(&self, rule: RuleId) -> Option<f64> {
        self.0.get(&rule).copied()
    }

    /// Rules whose threshold differs from the default, plus disabled rules
    /// (reported with `None`).
    pub fn overrides(&self) -> Vec<(RuleId, Option<f64>)> {
        RuleId::ALL
            .iter()
            .filter_map(|&rule| match self.threshold(rule) {
                Some(t) if t == rule.default_threshold() => None,
                other => Some((rule, other)),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityVerdict {
    pub passed: bool,
    pub failed_rules: Vec<RuleId>,
    pub measurements: BTreeMap<RuleId, f64>,
}

pub fn measure(rule: RuleId, text: &str) -> f64 {
    match rule {
        RuleId::MinWordCount => text.split_whitespace().count() as f64,
        RuleId::MaxBulletLineFraction => {
            let lines = content_lines(text);
            if lines.is_empty() {
                return 0.0;
            }
            lines.iter().filter(|l| is_bullet(l)).count() as f64 / lines.len() as f64
        }
        RuleId::MaxDuplicateLineFraction => {
            let lines = content_lines(text);
            if lines.is_empty() {
                return 0.0;
            }
            let distinct: HashSet<&str> = lines.iter().copied().collect();
            (lines.len() - distinct.len()) as f64 / lines.len() as f64
        }
        RuleId::MinAlphaFraction => {
            let (alpha, visible) = text
                .chars()
                .filter(|c| !c.is_whitespace())
                .fold((0usize, 0usize), |(a, v), c| (a + c.is_alphabetic() as usize, v + 1));
            if visible == 0 {
                // Nothing to judge; emptiness is caught by the word count.
                1.0
            } else {
                alpha as f64 / visible as f64
            }
        }
    }
}

fn content_lines(text: &str) -> Vec<&str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}

fn is_bullet(line: &str) -> bool {
    if line.starts_with(['-', '*', '•', '·', '–', '—', '>', '|']) {
        return true;
    }
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    digits > 0 && matches!(line.as_bytes().get(digits), Some(b'.' | b')'))
}

pub fn apply_quality_rules(text: &str, rules: &QualityRules) -> QualityVerdict {
    let mut failed_rules = Vec::new();
    let mut measurements = BTreeMap::new();
    for (&rule, &threshold) in &rules.0 {
        let value = measure(rule, text);
        if !rule.passes(value, threshold) {
            failed_rules.push(rule);
        }
        measurements.insert(rule, value);
    }
    QualityVerdict {
        passed: failed_rules.is_empty(),
        failed_rules,
        measurements,
    }
}
