//! Email and phone-number screening.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

const PATTERNS_JSON: &str = include_str!("../../data/sensitive_patterns.json");

#[derive(Deserialize)]
struct PatternFile {
    patterns_version: String,
    email: String,
    phone: Vec<String>,
}

struct Patterns {
    version: String,
    email: Regex,
    phone: Vec<Regex>,
}

static PATTERNS: LazyLock<Patterns> = LazyLock::new(|| {
    let file: PatternFile = serde_json::from_str(PATTERNS_JSON).expect("pattern file parses");
    Patterns {
        version: file.patterns_version,
        email: Regex::new(&file.email).expect("email pattern"),
        phone: file.phone.iter().map(|p| Regex::new(p).expect("phone pattern")).collect(),
    }
});

pub fn patterns_version() -> &'static str {
    &PATTERNS.version
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensitiveKind {
    Email,
    Phone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitiveFinding {
    pub kind: SensitiveKind,
    pub span: Span,
    pub redacted_preview: String,
}

/// Keeps the first and last character and masks everything between.
fn mask(matched: &str) -> String {
    let chars: Vec<char> = matched.chars().collect();
    if chars.len() <= 2 {
        return "*".repeat(chars.len().max(1));
    }
    let mut out = String::with_capacity(matched.len());
    out.push(chars[0]);
    out.extend(std::iter::repeat('*').take(chars.len() - 2));
    out.push(chars[chars.len() - 1]);
    out
}

fn bounded(text: &str, start: usize, end: usize) -> bool {
    let before = text[..start].chars().next_back();
    let after = text[end..].chars().next();
    !before.is_some_and(|c| c.is_ascii_digit() || c == '+')
        && !after.is_some_and(|c| c.is_ascii_digit())
}

pub fn screen_sensitive(text: &str) -> Vec<SensitiveFinding> {
    let patterns = &*PATTERNS;
    let mut spans: Vec<(SensitiveKind, usize, usize)> = patterns
        .email
        .find_iter(text)
        .map(|m| (SensitiveKind::Email, m.start(), m.end()))
        .collect();
    let emails = spans.clone();
    for re in &patterns.phone {
        for m in re.find_iter(text) {
            let (s, e) = (m.start(), m.end());
            if !bounded(text, s, e) {
                continue;
            }
            let overlaps = |&(_, os, oe): &(SensitiveKind, usize, usize)| s < oe && os < e;
            if emails.iter().any(overlaps) || spans.iter().any(overlaps) {
                continue;
            }
            spans.push((SensitiveKind::Phone, s, e));
        }
    }
    spans.sort_by_key(|&(_, s, e)| (s, e));
    spans
        .into_iter()
        .map(|(kind, start, end)| SensitiveFinding {
            kind,
            span: Span { start, end },
            redacted_preview: mask(&text[start..end]),
        })
        .collect()
}

/// Replaces each finding with a placeholder naming its kind.
pub fn redact(text: &str, findings: &[SensitiveFinding]) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for f in findings {
        out.push_str(&text[last..f.span.start]);
        out.push_str(match f.kind {
            SensitiveKind::Email => "[EMAIL]",
            SensitiveKind::Phone => "[PHONE]",
        });
        last = f.span.end;
    }
    out.push_str(&text[last..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_email() {
        let text = "write to jane.doe@example.org today";
        let found = screen_sensitive(text);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].kind, SensitiveKind::Email);
        assert_eq!(&text[found[0].span.start..found[0].span.end], "jane.doe@example.org");
        assert_eq!(found[0].redacted_preview, "j******************g");
    }

    #[test]
    fn empty_text() {
        assert!(screen_sensitive("").is_empty());
    }

    #[test]
    fn both_phone_forms() {
        let text = "+1 (555) 010-4477 or 555-010-4477";
        let found = screen_sensitive(text);
        let matched: Vec<_> = found
            .iter()
            .map(|f| (f.kind, &text[f.span.start..f.span.end]))
            .collect();
        assert_eq!(
            matched,
            vec![
                (SensitiveKind::Phone, "+1 (555) 010-4477"),
                (SensitiveKind::Phone, "555-010-4477"),
            ]
        );
        for f in &found {
            assert_ne!(f.redacted_preview, &text[f.span.start..f.span.end]);
        }
    }

    #[test]
    fn e164_and_digit_boundaries() {
        let found = screen_sensitive("call +442071838750 now");
        assert_eq!(found.len(), 1);
        // Part of a longer number is not a phone.
        assert!(screen_sensitive("id 98765550104477123").is_empty());
        assert!(screen_sensitive("in 2024 we had 12 cats").is_empty());
    }

    #[test]
    fn redaction_replaces_spans() {
        let text = "mail a.b@example.com or 555-010-4477.";
        let found = screen_sensitive(text);
        assert_eq!(redact(text, &found), "mail [EMAIL] or [PHONE].");
    }
}
