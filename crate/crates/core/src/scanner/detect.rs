//! Creative Commons license detection over raw HTML.
//!
//! Three detectors run over the decoded markup:
//! - `rel="license"` on `a`, `link` and `area` elements,
//! - a regular expression for creativecommons.org license and public-domain
//!   URLs anywhere in the markup (comments and scripts included),
//! - `meta` tags that name a license.
//!
//! URL matches that fall inside an element already reported by one of the
//! element detectors are not reported twice.

use std::sync::LazyLock;

use regex::Regex;
use url::Url;

use super::html::{decode_html, Token, Tokenizer};
use crate::error::{Error, Result};
use crate::hash::sha256_hex;
use crate::provenance::{DetectionMethod, Evidence, LicenseDetection, LicenseTable, LicenseTag};

static CC_URL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(?i)(?:(?:https?:)?//)?(?:www\.)?creativecommons\.org/(?:licenses|publicdomain)/[^\s"'<>()\\]*"#)
        .unwrap()
});

const LICENSE_META_NAMES: &[&str] = &[
    "license",
    "dc.rights",
    "dc.license",
    "dcterms.license",
    "dcterms.rights",
    "dct.license",
    "cc:license",
    "og:license",
    "rights",
    "copyright",
];

/// Only licenses published by Creative Commons are detected.
fn is_creative_commons(tag: &LicenseTag) -> bool {
    tag.is_known() && tag.spdx_id.starts_with("CC")
}

/// Decodes `html` (meta charset, then UTF-8) and runs all detectors.
pub fn detect_cc_license(html: &[u8], base_url: &str) -> Result<Vec<LicenseDetection>> {
    let decoded = decode_html(html, None).map_err(Error::Decode)?;
    Ok(detect_in_decoded(&decoded, base_url, LicenseTable::builtin()))
}

/// Runs all detectors over already-decoded markup. Evidence offsets are
/// byte offsets into `html`.
pub fn detect_in_decoded(html: &str, base_url: &str, table: &LicenseTable) -> Vec<LicenseDetection> {
    let base = Url::parse(base_url).ok();
    let digest = sha256_hex(html);
    let mut found: Vec<LicenseDetection> = Vec::new();
    let mut claimed: Vec<(usize, usize)> = Vec::new();

    let evidence = |snippet: &str, offset: usize| Evidence {
        snippet: snippet.to_string(),
        offset,
        input_digest: digest.clone(),
    };

    for token in Tokenizer::new(html) {
        let Token::Tag(tag) = token else { continue };
        if tag.closing {
            continue;
        }
        match tag.name.as_str() {
            "a" | "link" | "area" if tag.has_rel("license") => {
                let Some(href) = tag.attr("href") else { continue };
                let target = href.value.trim();
                if target.is_empty() {
                    continue;
                }
                let resolved = match &base {
                    Some(base) => base.join(target).map(String::from).unwrap_or_else(|_| target.to_string()),
                    None => target.to_string(),
                };
                let Ok(license) = table.normalize(&resolved) else { continue };
                if is_creative_commons(&license) {
                    found.push(LicenseDetection::new(
                        license,
                        DetectionMethod::RelLicenseLink,
                        evidence(href.value, href.value_offset),
                    ));
                    claimed.push((tag.start, tag.end));
                }
            }
            "meta" => {
                let named = ["name", "property"]
                    .iter()
                    .filter_map(|k| tag.attr_value(k))
                    .any(|n| LICENSE_META_NAMES.contains(&n.trim().to_ascii_lowercase().as_str()));
                let Some(content) = tag.attr("content") else { continue };
                if !named || content.value.trim().is_empty() {
                    continue;
                }
                let Ok(license) = table.normalize(content.value) else { continue };
                if is_creative_commons(&license) {
                    found.push(LicenseDetection::new(
                        license,
                        DetectionMethod::MetaTag,
                        evidence(content.value, content.value_offset),
                    ));
                    claimed.push((tag.start, tag.end));
                }
            }
            _ => {}
        }
    }

    for m in CC_URL.find_iter(html) {
        let start = m.start();
        if start > 0 {
            let prev = html.as_bytes()[start - 1];
            if prev.is_ascii_alphanumeric() || matches!(prev, b'.' | b'-' | b'_') {
                continue;
            }
        }
        if claimed.iter().any(|&(s, e)| start >= s && start < e) {
            continue;
        }
        let snippet = m.as_str().trim_end_matches(['.', ',', ';', ':', '!', '?']);
        let Ok(license) = table.normalize(snippet) else { continue };
        if is_creative_commons(&license) {
            found.push(LicenseDetection::new(
                license,
                DetectionMethod::CcUrlRegex,
                evidence(snippet, start),
            ));
        }
    }

    found.sort_by(|a, b| {
        a.evidence()
            .offset
            .cmp(&b.evidence().offset)
            .then_with(|| a.method().cmp(&b.method()))
    });
    found.dedup_by(|a, b| a.evidence().offset == b.evidence().offset);
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provenance::ScopeConfidence;

    fn detect(html: &str) -> Vec<LicenseDetection> {
        detect_cc_license(html.as_bytes(), "https://example.org/page").unwrap()
    }

    #[test]
    fn rel_license_link() {
        let html = r#"<p>text</p><a rel="license" href="https://creativecommons.org/licenses/by/4.0/">CC BY</a>"#;
        let found = detect(html);
        assert_eq!(found.len(), 1);
        let d = &found[0];
        assert_eq!(d.tag().spdx_id, "CC-BY-4.0");
        assert_eq!(d.method(), DetectionMethod::RelLicenseLink);
        assert_eq!(d.scope_confidence(), ScopeConfidence::AssetLevelUncertain);
        assert!(d.evidence().verify_against(html));
    }

    #[test]
    fn nothing_to_match() {
        assert!(detect("<html><body><p>All rights reserved.</p><a href=\"/about\">About</a></body></html>").is_empty());
    }

    #[test]
    fn body_url_and_footer_link_are_two_detections() {
        let html = concat!(
            "<html><body><p>Photo from http://creativecommons.org/licenses/by-sa/3.0/ source.</p>",
            "<footer><a rel=\"license\" href=\"https://creativecommons.org/licenses/by/4.0/\">CC BY 4.0</a></footer>",
            "</body></html>"
        );
        let found = detect(html);
        // Hand enumeration: one URL in the paragraph at byte 26, one rel link
        // whose href value starts at byte 115. The URL inside the href is
        // claimed by the rel detector.
        let para = html.find("http://creativecommons.org/licenses/by-sa").unwrap();
        let href = html.find("https://creativecommons.org/licenses/by/4.0").unwrap();
        assert_eq!((para, href), (26, 115));
        let summary: Vec<_> = found
            .iter()
            .map(|d| (d.tag().spdx_id.as_str(), d.method(), d.evidence().offset))
            .collect();
        assert_eq!(
            summary,
            vec![
                ("CC-BY-SA-3.0", DetectionMethod::CcUrlRegex, 26),
                ("CC-BY-4.0", DetectionMethod::RelLicenseLink, 115),
            ]
        );
    }

    #[test]
    fn meta_tags_are_page_level() {
        let html = r#"<head><meta name="dcterms.license" content="CC BY-NC 4.0"></head>"#;
        let found = detect(html);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].tag().spdx_id, "CC-BY-NC-4.0");
        assert_eq!(found[0].method(), DetectionMethod::MetaTag);
        assert_eq!(found[0].scope_confidence(), ScopeConfidence::PageLevel);
        assert!(found[0].evidence().verify_against(html));
    }

    #[test]
    fn relative_rel_license_and_non_cc_targets() {
        let html = r#"<a rel="license" href="/terms">terms</a><a rel="license" href="https://opensource.org/licenses/MIT">MIT</a>"#;
        assert!(detect(html).is_empty());
    }

    #[test]
    fn trailing_punctuation_and_lookalike_hosts() {
        let html = "see creativecommons.org/publicdomain/zero/1.0/. Not notcreativecommons.org/licenses/by/4.0/";
        let found = detect(html);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].tag().spdx_id, "CC0-1.0");
        assert_eq!(found[0].evidence().snippet, "creativecommons.org/publicdomain/zero/1.0/");
    }

    #[test]
    fn undecodable_bytes_error() {
        assert!(matches!(
            detect_cc_license(b"<p>\xc3\x28</p>", "https://example.org/"),
            Err(Error::Decode(_))
        ));
    }
}
