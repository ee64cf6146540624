use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::normalize::{normalize_author, normalize_reg_id, normalize_title};
use crate::error::{Error, Result};
use crate::hash::sha256_hex;

pub const MIN_YEAR: i32 = 1800;
pub const MAX_YEAR: i32 = 2100;

/// A year with optional month and day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartialDate {
    pub year: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub month: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub day: Option<u8>,
}

impl PartialDate {
    pub fn year(year: i32) -> Self {
        PartialDate {
            year,
            month: None,
            day: None,
        }
    }

    pub fn new(year: i32, month: Option<u8>, day: Option<u8>) -> Result<Self> {
        if !(MIN_YEAR..=MAX_YEAR).contains(&year) {
            return Err(Error::InvalidArgument(format!(
                "year {year} outside [{MIN_YEAR}, {MAX_YEAR}]"
            )));
        }
        if month.is_some_and(|m| !(1..=12).contains(&m)) || day.is_some_and(|d| !(1..=31).contains(&d)) {
            return Err(Error::InvalidArgument(format!(
                "invalid month/day {month:?}/{day:?}"
            )));
        }
        if day.is_some() && month.is_none() {
            return Err(Error::InvalidArgument("day given without month".into()));
        }
        Ok(PartialDate { year, month, day })
    }

    /// Parses `YYYY`, `YYYY-MM` or `YYYY-MM-DD`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = s.trim().splitn(3, '-');
        let bad = || Error::InvalidArgument(format!("unparseable date `{s}`"));
        let year = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let month = parts.next().map(|m| m.parse().map_err(|_| bad())).transpose()?;
        let day = parts.next().map(|d| d.parse().map_err(|_| bad())).transpose()?;
        PartialDate::new(year, month, day)
    }
}

impl fmt::Display for PartialDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}", self.year)?;
        if let Some(m) = self.month {
            write!(f, "-{m:02}")?;
        }
        if let Some(d) = self.day {
            write!(f, "-{d:02}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordSource {
    Structured,
    Extracted,
}

/// A copyright registration entry. Registration ids are not unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopyrightRecord {
    pub reg_id: String,
    pub title: String,
    pub author: String,
    pub pub_date: Option<PartialDate>,
    pub source: RecordSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_confidence: Option<BTreeMap<String, f64>>,
    /// Key shared between an extracted record and its ground truth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub work_key: Option<String>,
}

impl CopyrightRecord {
    pub fn new(
        reg_id: impl Into<String>,
        title: impl Into<String>,
        author: impl Into<String>,
        pub_date: Option<PartialDate>,
        source: RecordSource,
    ) -> Result<Self> {
        let record = CopyrightRecord {
            reg_id: reg_id.into(),
            title: title.into(),
            author: author.into(),
            pub_date,
            source,
            field_confidence: None,
            work_key: None,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if self.title.trim().is_empty() {
            return Err(Error::InvalidArgument("title is empty".into()));
        }
        if let Some(d) = self.pub_date {
            PartialDate::new(d.year, d.month, d.day)?;
        }
        Ok(())
    }

    pub fn pub_year(&self) -> Option<i32> {
        self.pub_date.map(|d| d.year)
    }

    /// Stable content-derived key; independent of input row order.
    pub fn key(&self) -> String {
        let date = self.pub_date.map(|d| d.to_string()).unwrap_or_default();
        let digest = sha256_hex(format!(
            "{}\u{1f}{}\u{1f}{}\u{1f}{}",
            self.reg_id, self.title, self.author, date
        ));
        digest[..16].to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalRecord {
    pub renewal_id: String,
    pub original_reg_id: Option<String>,
    pub title: String,
    pub author: String,
    pub original_pub_date: Option<PartialDate>,
    pub renewal_date: PartialDate,
}

/// A registration with its normalized matching fields alongside the
/// verbatim record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedRegistration {
    pub key: String,
    pub record: CopyrightRecord,
    pub reg_id_norm: String,
    pub title_norm: String,
    pub author_norm: String,
}

impl NormalizedRegistration {
    pub fn new(record: CopyrightRecord) -> Self {
        NormalizedRegistration {
            key: record.key(),
            reg_id_norm: normalize_reg_id(&record.reg_id),
            title_norm: normalize_title(&record.title),
            author_norm: normalize_author(&record.author),
            record,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedRenewal {
    pub record: RenewalRecord,
    pub reg_id_norm: Option<String>,
    pub title_norm: String,
    pub author_norm: String,
}

impl NormalizedRenewal {
    pub fn new(record: RenewalRecord) -> Self {
        NormalizedRenewal {
            reg_id_norm: record
                .original_reg_id
                .as_deref()
                .map(normalize_reg_id)
                .filter(|id| !id.is_empty()),
            title_norm: normalize_title(&record.title),
            author_norm: normalize_author(&record.author),
            record,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchStage {
    RegIdExact,
    TitleAuthorExact,
    Fuzzy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchStatus {
    Confirmed,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// Registration key.
    pub registration: String,
    /// Renewal id.
    pub renewal: String,
    pub stage: MatchStage,
    pub score: f64,
    pub title_similarity: f64,
    pub date_window_ok: bool,
    pub status: MatchStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PdOutcome {
    Excluded,
    RequiresInvestigation,
    BelievedPublicDomain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PdBasis {
    PreCutoffYear,
    RenewalFound,
    NoRenewalFound,
    AmbiguousMatch,
    OutOfRuleRange,
    MissingPubDate,
}

impl PdBasis {
    pub fn as_str(self) -> &'static str {
        match self {
            PdBasis::PreCutoffYear => "pre-cutoff-year",
            PdBasis::RenewalFound => "renewal-found",
            PdBasis::NoRenewalFound => "no-renewal-found",
            PdBasis::AmbiguousMatch => "ambiguous-match",
            PdBasis::OutOfRuleRange => "out-of-rule-range",
            PdBasis::MissingPubDate => "missing-pub-date",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdClassification {
    pub outcome: PdOutcome,
    pub basis: PdBasis,
    pub evidence: Vec<MatchResult>,
}
