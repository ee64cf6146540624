//! License identifiers and the shipped normalization table.

use std::collections::HashMap;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUILTIN_TABLE: &str = include_str!("../../data/license_table.json");

static BUILTIN: LazyLock<LicenseTable> =
    LazyLock::new(|| LicenseTable::from_json(BUILTIN_TABLE).expect("builtin license table parses"));

static PARENTHESIZED_CC: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\((cc[^)]*)\)").unwrap());
static VERSION_TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^v?(\d)(?:\.(\d))?$").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LicenseFamily {
    Cc,
    PublicDomainDedication,
    OtherOpen,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LicenseTag {
    pub spdx_id: String,
    pub family: LicenseFamily,
}

impl LicenseTag {
    pub fn unknown(raw: impl Into<String>) -> Self {
        LicenseTag {
            spdx_id: raw.into(),
            family: LicenseFamily::Unknown,
        }
    }

    pub fn is_known(&self) -> bool {
        self.family != LicenseFamily::Unknown
    }
}

impl fmt::Display for LicenseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spdx_id)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LicenseEntry {
    pub id: String,
    pub family: LicenseFamily,
    /// Whether the license satisfies the open-definition predicate.
    pub open: bool,
    #[serde(default)]
    pub url_paths: Vec<String>,
    #[serde(default)]
    pub aliases: Vec<String>,
}

impl LicenseEntry {
    fn tag(&self) -> LicenseTag {
        LicenseTag {
            spdx_id: self.id.clone(),
            family: self.family,
        }
    }
}

#[derive(Debug, Deserialize)]
struct TableFile {
    table_version: String,
    licenses: Vec<LicenseEntry>,
}

/// Versioned mapping from license spellings and Creative Commons URLs to
/// canonical identifiers.
#[derive(Debug)]
pub struct LicenseTable {
    version: String,
    entries: Vec<LicenseEntry>,
    by_id: HashMap<String, usize>,
    by_path: HashMap<String, usize>,
    by_alias: HashMap<String, usize>,
}

impl LicenseTable {
    pub fn builtin() -> &'static LicenseTable {
        &BUILTIN
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: TableFile = serde_json::from_str(json)?;
        let mut by_id = HashMap::new();
        let mut by_path = HashMap::new();
        let mut by_alias = HashMap::new();
        for (idx, entry) in file.licenses.iter().enumerate() {
            if by_id.insert(entry.id.to_ascii_lowercase(), idx).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate license id {}",
                    entry.id
                )));
            }
            for path in &entry.url_paths {
                by_path.insert(path.trim_matches('/').to_ascii_lowercase(), idx);
            }
            by_alias.insert(alias_key(&entry.id), idx);
            for alias in &entry.aliases {
                by_alias.insert(alias_key(alias), idx);
            }
        }
        Ok(LicenseTable {
            version: file.table_version,
            entries: file.licenses,
            by_id,
            by_path,
            by_alias,
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn entries(&self) -> &[LicenseEntry] {
        &self.entries
    }

    pub fn entry(&self, spdx_id: &str) -> Option<&LicenseEntry> {
        self.by_id
            .get(&spdx_id.to_ascii_lowercase())
            .map(|&i| &self.entries[i])
    }

    /// Open-definition predicate. Unknown tags are never open.
    pub fn is_open(&self, tag: &LicenseTag) -> bool {
        tag.is_known() && self.entry(&tag.spdx_id).is_some_and(|e| e.open)
    }

    pub fn normalize(&self, raw: &str) -> Result<LicenseTag> {
        self.normalize_with_version(raw, None)
    }

    /// Like [`normalize`](Self::normalize), for sources that declare the
    /// license name and its version in separate fields.
    pub fn normalize_with_version(&self, raw: &str, version: Option<&str>) -> Result<LicenseTag> {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return Err(Error::InvalidArgument("empty license string".into()));
        }
        if let Some(entry) = self.entry(trimmed) {
            return Ok(entry.tag());
        }
        let lower = trimmed.to_ascii_lowercase();
        let found = if let Some(pos) = lower.find("creativecommons.org") {
            self.lookup_cc_path(&lower[pos + "creativecommons.org".len()..])
        } else {
            self.lookup_free_text(&lower, version)
        };
        Ok(found
            .map(LicenseEntry::tag)
            .unwrap_or_else(|| LicenseTag::unknown(raw)))
    }

    fn lookup_cc_path(&self, rest: &str) -> Option<&LicenseEntry> {
        let path = rest
            .split(['?', '#'])
            .next()
            .unwrap_or_default();
        let mut segments: Vec<&str> = path.split('/').filter(|s| !s.is_empty()).collect();
        // Drop trailing legal-code and deed suffixes.
        while let Some(last) = segments.last() {
            if last.starts_with("legalcode") || last.starts_with("deed") || *last == "rdf" {
                segments.pop();
            } else {
                break;
            }
        }
        let key = segments.join("/");
        if let Some(&i) = self.by_path.get(&key) {
            return Some(&self.entries[i]);
        }
        // Jurisdiction ports without a dedicated identifier resolve to the
        // unported license.
        if segments.len() == 4 && segments[0] == "licenses" {
            let unported = segments[..3].join("/");
            return self.by_path.get(&unported).map(|&i| &self.entries[i]);
        }
        None
    }

    fn lookup_free_text(&self, lower: &str, version: Option<&str>) -> Option<&LicenseEntry> {
        let with_version = match version {
            Some(v) if !v.trim().is_empty() => format!("{lower} {}", v.trim()),
            _ => lower.to_string(),
        };
        if let Some(&i) = self.by_alias.get(&alias_key(&with_version)) {
            return Some(&self.entries[i]);
        }
        let cc_id = parse_cc_free_text(lower, version)?;
        self.entry(&cc_id)
    }
}

fn alias_key(s: &str) -> String {
    s.to_lowercase()
        .replace(['-', '_', ','], " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses spellings such as "CC BY-SA 4.0" or "Creative Commons
/// Attribution-NonCommercial 3.0 Unported" into a candidate identifier.
fn parse_cc_free_text(lower: &str, version: Option<&str>) -> Option<String> {
    let mut text = lower.to_string();
    if let Some(caps) = PARENTHESIZED_CC.captures(&text) {
        text = caps[1].to_string();
    }
    let replacements: [(&str, &str); 12] = [
        ("creative commons", "cc"),
        ("attribution", "by"),
        ("share-alike", "sa"),
        ("sharealike", "sa"),
        ("share alike", "sa"),
        ("non-commercial", "nc"),
        ("noncommercial", "nc"),
        ("non commercial", "nc"),
        ("no-derivatives", "nd"),
        ("noderivatives", "nd"),
        ("no derivatives", "nd"),
        ("noderivs", "nd"),
    ];
    for (from, to) in replacements {
        text = text.replace(from, to);
    }
    let mut tokens = text
        .split(|c: char| c.is_whitespace() || matches!(c, '-' | '_' | '/' | ',' | '(' | ')'))
        .filter(|t| !t.is_empty())
        .filter(|t| {
            !matches!(
                *t,
                "international" | "unported" | "generic" | "license" | "licence" | "public" | "version"
            )
        });
    if tokens.next()? != "cc" {
        return None;
    }
    let (mut by, mut nc, mut nd, mut sa) = (false, false, false, false);
    let mut ver: Option<String> = None;
    for token in tokens {
        if ver.is_some() {
            // Nothing may follow the version except a jurisdiction code,
            // which carries no separate identifier here.
            if token.len() <= 3 && token.chars().all(|c| c.is_ascii_alphabetic()) {
                continue;
            }
            return None;
        }
        match token {
            "by" => by = true,
            "nc" => nc = true,
            "nd" => nd = true,
            "sa" => sa = true,
            t => {
                let caps = VERSION_TOKEN.captures(t)?;
                let minor = caps.get(2).map_or("0", |m| m.as_str());
                ver = Some(format!("{}.{}", &caps[1], minor));
            }
        }
    }
    if ver.is_none() {
        if let Some(v) = version {
            let caps = VERSION_TOKEN.captures(v.trim())?;
            let minor = caps.get(2).map_or("0", |m| m.as_str());
            ver = Some(format!("{}.{}", &caps[1], minor));
        }
    }
    if !by || (nd && sa) {
        return None;
    }
    let mut id = String::from("CC-BY");
    if nc {
        id.push_str("-NC");
    }
    if nd {
        id.push_str("-ND");
    }
    if sa {
        id.push_str("-SA");
    }
    id.push('-');
    id.push_str(&ver?);
    Some(id)
}

/// Maps a free-text license string or URL to its canonical tag using the
/// builtin table.
pub fn normalize_license(raw: &str) -> Result<LicenseTag> {
    LicenseTable::builtin().normalize(raw)
}

pub fn normalize_license_with_version(raw: &str, version: Option<&str>) -> Result<LicenseTag> {
    LicenseTable::builtin().normalize_with_version(raw, version)
}
