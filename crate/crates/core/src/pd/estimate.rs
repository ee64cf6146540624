//! Expected number of works wrongly classified public domain because of
//! extraction errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-field extraction accuracies and the number of works they apply to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldAccuracyProfile {
    pub a_title: f64,
    pub a_reg: f64,
    pub a_author: f64,
    pub a_date: f64,
    pub n_works: u64,
}

impl FieldAccuracyProfile {
    /// Reported extraction accuracies over 424,059 works.
    pub const REPORTED: FieldAccuracyProfile = FieldAccuracyProfile {
        a_title: 0.9658,
        a_reg: 0.9720,
        a_author: 0.9025,
        a_date: 0.8766,
        n_works: 424_059,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("a_title", self.a_title),
            ("a_reg", self.a_reg),
            ("a_author", self.a_author),
            ("a_date", self.a_date),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidArgument(format!("{name}={value} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MisclassificationEstimate {
    /// Probability that both title and registration number are wrong.
    pub p_exact: f64,
    pub p_exact_pct: f64,
    pub expected_wrong_exact: f64,
    /// `p_exact` as a percentage, rounded half-up to two decimals.
    pub p_rounded_pct: f64,
    /// `p_exact` as a percentage, truncated to two decimals.
    pub p_truncated_pct: f64,
    /// Expected count using the truncated two-decimal percentage.
    pub expected_wrong_paper_style: f64,
    /// Author and date accuracy do not enter the probability: errors there
    /// cannot produce a false public-domain classification.
    pub a_author: f64,
    pub a_date: f64,
    pub n_works: u64,
}

pub fn estimate_misclassification(profile: &FieldAccuracyProfile) -> Result<MisclassificationEstimate> {
    profile.validate()?;
    let p_exact = (1.0 - profile.a_title) * (1.0 - profile.a_reg);
    let n = profile.n_works as f64;
    let pct = p_exact * 100.0;
    // Nudge before flooring so 0.09 stored as 0.0899999.. stays 0.09.
    let p_truncated_pct = ((pct * 100.0) + 1e-9).floor() / 100.0;
    let p_rounded_pct = (pct * 100.0).round() / 100.0;
    Ok(MisclassificationEstimate {
        p_exact,
        p_exact_pct: pct,
        expected_wrong_exact: p_exact * n,
        p_rounded_pct,
        p_truncated_pct,
        expected_wrong_paper_style: p_truncated_pct / 100.0 * n,
        a_author: profile.a_author,
        a_date: profile.a_date,
        n_works: profile.n_works,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(a_title: f64, a_reg: f64, n_works: u64) -> FieldAccuracyProfile {
        FieldAccuracyProfile {
            a_title,
            a_reg,
            a_author: 1.0,
            a_date: 1.0,
            n_works,
        }
    }

    #[test]
    fn reported_profile() {
        let e = estimate_misclassification(&FieldAccuracyProfile::REPORTED).unwrap();
        // 0.0342 * 0.0280
        assert!((e.p_exact - 0.0009576).abs() < 1e-12);
        assert!((e.expected_wrong_exact - 406.0789).abs() < 1e-3);
        assert_eq!(e.p_rounded_pct, 0.10);
        assert_eq!(e.p_truncated_pct, 0.09);
        assert!((e.expected_wrong_paper_style - 381.6531).abs() < 1e-6);
    }

    #[test]
    fn perfect_extraction() {
        let e = estimate_misclassification(&profile(1.0, 1.0, 424_059)).unwrap();
        assert_eq!(e.p_exact, 0.0);
        assert_eq!(e.expected_wrong_exact, 0.0);
    }

    #[test]
    fn direct_arithmetic() {
        let e = estimate_misclassification(&profile(0.9, 0.9, 1000)).unwrap();
        assert!((e.p_exact - 0.01).abs() < 1e-15);
        assert!((e.expected_wrong_exact - 10.0).abs() < 1e-9);
    }

    #[test]
    fn out_of_range() {
        assert!(estimate_misclassification(&profile(1.1, 0.9, 1)).is_err());
        assert!(estimate_misclassification(&profile(0.9, -0.1, 1)).is_err());
    }
}
