//! Bibliographic field normalization for matching.

use deunicode::deunicode;

const LEADING_ARTICLES: &[&str] = &["a ", "an ", "the "];
const NAME_SUFFIXES: &[&str] = &["jr", "sr", "ii", "iii", "iv"];

/// ASCII-folds, lowercases, drops punctuation and collapses whitespace.
fn fold(s: &str) -> String {
    let ascii = deunicode(s).to_lowercase();
    let mut out = String::with_capacity(ascii.len());
    for c in ascii.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c);
        } else if c == '\'' {
            // "don't" -> "dont"
        } else {
            out.push(' ');
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn normalize_title(title: &str) -> String {
    let folded = fold(title);
    for article in LEADING_ARTICLES {
        if let Some(rest) = folded.strip_prefix(article) {
            return rest.to_string();
        }
    }
    folded
}

/// Canonical `surname, given` form when an inversion or a comma is
/// detectable; otherwise the folded name.
pub fn normalize_author(author: &str) -> String {
    let ascii = deunicode(author);
    if let Some((surname, given)) = ascii.split_once(',') {
        let surname = fold(surname);
        let given = fold(given);
        return match (surname.is_empty(), given.is_empty()) {
            (false, false) => format!("{surname}, {given}"),
            (false, true) => surname,
            _ => given,
        };
    }
    let folded = fold(&ascii);
    let mut tokens: Vec<&str> = folded.split(' ').filter(|t| !t.is_empty()).collect();
    let suffix = match tokens.last() {
        Some(last) if tokens.len() > 2 && NAME_SUFFIXES.contains(last) => tokens.pop(),
        _ => None,
    };
    if tokens.len() < 2 {
        return folded;
    }
    let surname = tokens.pop().unwrap_or_default();
    let mut given = tokens.join(" ");
    if let Some(s) = suffix {
        given.push(' ');
        given.push_str(s);
    }
    format!("{surname}, {given}")
}

/// Uppercase alphanumerics only: "A- 123456" and "A123456" agree.
pub fn normalize_reg_id(reg_id: &str) -> String {
    deunicode(reg_id)
        .chars()
        .filter(char::is_ascii_alphanumeric)
        .map(|c| c.to_ascii_uppercase())
        .collect()
}
