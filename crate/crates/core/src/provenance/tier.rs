//! Openness tiers and the dataset-vs-constituent licensing rule.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::license::{LicenseTable, LicenseTag};
use super::record::DocumentRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    Unclassified,
    Tier1,
    Tier2,
    Tier3,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Unclassified => "Unclassified",
            Tier::Tier1 => "Tier 1",
            Tier::Tier2 => "Tier 2",
            Tier::Tier3 => "Tier 3 (Fully open)",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpennessAssessment {
    pub openly_licensed: bool,
    pub open_access: bool,
    pub replicable: bool,
    pub tier: Tier,
}

/// Highest tier whose requirements all hold. Every tier requires
/// replicability; tier 2 adds open access; tier 3 adds open licensing.
pub fn assess_tier(openly_licensed: bool, open_access: bool, replicable: bool) -> OpennessAssessment {
    let tier = match (openly_licensed, open_access, replicable) {
        (_, _, false) => Tier::Unclassified,
        (true, true, true) => Tier::Tier3,
        (false, true, true) => Tier::Tier2,
        (_, false, true) => Tier::Tier1,
    };
    OpennessAssessment {
        openly_licensed,
        open_access,
        replicable,
        tier,
    }
}

/// A constituent is open when it is classified public domain, or when it
/// carries at least one detection and every detected license is open.
pub fn is_constituent_open(doc: &DocumentRecord, table: &LicenseTable) -> bool {
    if doc.is_public_domain() {
        return true;
    }
    !doc.licenses.is_empty() && doc.licenses.iter().all(|d| table.is_open(d.tag()))
}

/// Whether a dataset is openly licensed. Only the constituents decide: a
/// permissive license on the arrangement does not relicense the underlying
/// data.
pub fn aggregate_constituent_licensing(
    dataset_level_license: &LicenseTag,
    constituents: &[DocumentRecord],
) -> Result<bool> {
    aggregate_with_table(dataset_level_license, constituents, LicenseTable::builtin())
}

pub fn aggregate_with_table(
    _dataset_level_license: &LicenseTag,
    constituents: &[DocumentRecord],
    table: &LicenseTable,
) -> Result<bool> {
    if constituents.is_empty() {
        return Err(Error::InvalidArgument(
            "openness of an empty constituent list is not asserted".into(),
        ));
    }
    Ok(constituents.iter().all(|doc| is_constituent_open(doc, table)))
}
