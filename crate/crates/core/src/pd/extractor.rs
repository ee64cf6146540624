//! Accuracy harness for metadata extractors. The extractor itself is
//! external; this compares its output to structured ground truth.

use std::collections::BTreeMap;

use super::estimate::FieldAccuracyProfile;
use super::normalize::{normalize_author, normalize_reg_id, normalize_title};
use super::record::CopyrightRecord;
use crate::error::{Error, Result};

fn keyed<'a>(records: &'a [CopyrightRecord], side: &str) -> Result<BTreeMap<&'a str, &'a CopyrightRecord>> {
    let mut out = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let key = r
            .work_key
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument(format!("{side} record {} has no work_key", i + 1)))?;
        if out.insert(key, r).is_some() {
            return Err(Error::InvalidArgument(format!("{side} work_key `{key}` is duplicated")));
        }
    }
    Ok(out)
}

/// Per-field fraction of works whose normalized extracted value equals the
/// normalized ground truth.
pub fn evaluate_extractor(
    extracted: &[CopyrightRecord],
    ground_truth: &[CopyrightRecord],
) -> Result<FieldAccuracyProfile> {
    if extracted.len() != ground_truth.len() {
        return Err(Error::InvalidArgument(format!(
            "extracted has {} records, ground truth has {}",
            extracted.len(),
            ground_truth.len()
        )));
    }
    if extracted.is_empty() {
        return Err(Error::InvalidArgument("no works to evaluate".into()));
    }
    let truth = keyed(ground_truth, "ground-truth")?;
    let got = keyed(extracted, "extracted")?;
    let mut hits = [0usize; 4];
    for (key, t) in &truth {
        let e = got
            .get(key)
            .ok_or_else(|| Error::InvalidArgument(format!("work_key `{key}` missing from extracted records")))?;
        let checks = [
            normalize_title(&e.title) == normalize_title(&t.title),
            normalize_reg_id(&e.reg_id) == normalize_reg_id(&t.reg_id),
            normalize_author(&e.author) == normalize_author(&t.author),
            e.pub_date == t.pub_date,
        ];
        for (hit, ok) in hits.iter_mut().zip(checks) {
            *hit += usize::from(ok);
        }
    }
    let n = truth.len() as f64;
    Ok(FieldAccuracyProfile {
        a_title: hits[0] as f64 / n,
        a_reg: hits[1] as f64 / n,
        a_author: hits[2] as f64 / n,
        a_date: hits[3] as f64 / n,
        n_works: truth.len() as u64,
    })
}
