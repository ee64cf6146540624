use curator_core::pd::{
    classify, classify_corpus, estimate_misclassification, evaluate_extractor, match_renewals, ClassifyRules,
    CopyrightRecord, FieldAccuracyProfile, MatchConfig, MatchResult, MatchStage, MatchStatus, NormalizedRegistration,
    NormalizedRenewal, PartialDate, PdBasis, PdOutcome, RecordSource, RenewalIndex,
};
use curator_core::testkit::biblio::{ocr_noise, CorpusSpec, SyntheticCorpus};
use curator_core::testkit::oracle;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn normalized(corpus: &SyntheticCorpus) -> (Vec<NormalizedRegistration>, Vec<NormalizedRenewal>) {
    (
        corpus.registrations.iter().cloned().map(NormalizedRegistration::new).collect(),
        corpus.renewals.iter().cloned().map(NormalizedRenewal::new).collect(),
    )
}

/// Counts registrations whose matches or classification differ from the
/// brute-force oracle.
fn divergences(corpus: &SyntheticCorpus, cfg: &MatchConfig, rules: &ClassifyRules) -> (usize, Vec<Vec<MatchResult>>) {
    let (regs, rens) = normalized(corpus);
    let expected = oracle::match_all(&regs, &rens, cfg);
    let got = match_renewals(&regs, rens, cfg);
    let mut diverged = 0;
    for ((reg, e), g) in regs.iter().zip(&expected).zip(&got) {
        let c = classify(reg, g, rules);
        if e != g || oracle::classify(reg, e, rules) != (c.outcome, c.basis) {
            diverged += 1;
        }
    }
    (diverged, got)
}

#[test]
fn staged_matcher_equals_brute_force_on_noisy_corpus() {
    let cfg = MatchConfig::default();
    let rules = ClassifyRules::default();
    for seed in [1, 2, 3] {
        let corpus = SyntheticCorpus::generate(&CorpusSpec::new(1000, 400, 0.04, seed));
        let (diverged, matches) = divergences(&corpus, &cfg, &rules);
        assert_eq!(diverged, 0, "seed {seed}");
        // The corpus exercises every stage and both statuses.
        let flat: Vec<&MatchResult> = matches.iter().flatten().collect();
        for stage in [MatchStage::RegIdExact, MatchStage::TitleAuthorExact, MatchStage::Fuzzy] {
            assert!(flat.iter().any(|m| m.stage == stage), "seed {seed}: no {stage:?}");
        }
        for status in [MatchStatus::Confirmed, MatchStatus::Ambiguous] {
            assert!(flat.iter().any(|m| m.status == status), "seed {seed}: no {status:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn staged_matcher_equals_brute_force_on_random_corpora(
        seed in any::<u64>(),
        regs in 1usize..120,
        rens in 0usize..80,
        noise in 0.0f64..0.2,
        threshold in 0.6f64..0.95,
        band in 0.0f64..0.1,
        window_lo in 10i32..25,
        window_len in 0i32..15,
    ) {
        let cfg = MatchConfig {
            threshold,
            ambiguity_band: band,
            renewal_window_years: (window_lo, window_lo + window_len),
        };
        let corpus = SyntheticCorpus::generate(&CorpusSpec::new(regs, rens, noise, seed));
        let (diverged, _) = divergences(&corpus, &cfg, &ClassifyRules::default());
        prop_assert_eq!(diverged, 0);
    }
}

fn arb_match(status: MatchStatus) -> MatchResult {
    MatchResult {
        registration: "k".into(),
        renewal: "R".into(),
        stage: MatchStage::Fuzzy,
        score: 0.9,
        title_similarity: 0.9,
        date_window_ok: true,
        status,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(10_000) })]

    #[test]
    fn confirmed_renewal_is_never_public_domain(
        year in proptest::option::weighted(0.95, 1880i32..2000),
        statuses in proptest::collection::vec(any::<bool>(), 0..6),
        cutoff in 1900i32..1950,
        lo in 1900i32..1960,
        len in 0i32..50,
    ) {
        let reg = NormalizedRegistration::new(
            CopyrightRecord::new("A1", "A Title", "Some Author", year.map(PartialDate::year), RecordSource::Extracted)
                .unwrap(),
        );
        let matches: Vec<MatchResult> = statuses
            .iter()
            .map(|&c| arb_match(if c { MatchStatus::Confirmed } else { MatchStatus::Ambiguous }))
            .collect();
        let rules = ClassifyRules { pre_cutoff_year: cutoff, renewal_rule_years: (lo, lo + len) };
        let c = classify(&reg, &matches, &rules);
        if statuses.iter().any(|&s| s) {
            prop_assert_ne!(c.outcome, PdOutcome::BelievedPublicDomain);
        }
        if c.outcome == PdOutcome::BelievedPublicDomain {
            prop_assert!(matches.is_empty());
        }
        prop_assert_eq!(oracle::classify(&reg, &matches, &rules), (c.outcome, c.basis));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(200) })]

    #[test]
    fn safety_holds_end_to_end(seed in any::<u64>(), regs in 1usize..150, rens in 0usize..100, noise in 0.0f64..0.15) {
        let corpus = SyntheticCorpus::generate(&CorpusSpec::new(regs, rens, noise, seed));
        let (r, n) = normalized(&corpus);
        let works = classify_corpus(r, n, &MatchConfig::default(), &ClassifyRules::default(), &[]);
        for w in works {
            let confirmed = w.classification.evidence.iter().any(|m| m.status == MatchStatus::Confirmed);
            if confirmed {
                prop_assert_ne!(w.classification.outcome, PdOutcome::BelievedPublicDomain);
            }
        }
    }
}

#[test]
fn classification_is_independent_of_input_order() {
    let corpus = SyntheticCorpus::generate(&CorpusSpec::new(600, 250, 0.05, 11));
    let (regs, rens) = normalized(&corpus);
    let cfg = MatchConfig::default();
    let rules = ClassifyRules::default();
    let baseline = classify_corpus(regs.clone(), rens.clone(), &cfg, &rules, &[]);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let mut r = regs.clone();
        let mut n = rens.clone();
        r.shuffle(&mut rng);
        n.shuffle(&mut rng);
        assert_eq!(classify_corpus(r, n, &cfg, &rules, &[]), baseline);
    }
}

fn perturb(rng: &mut ChaCha8Rng, record: &CopyrightRecord) -> CopyrightRecord {
    let mut r = record.clone();
    match rng.gen_range(0..3) {
        0 => r.author = ocr_noise(rng, &r.author, 0.3),
        1 => r.pub_date = perturbed_date(rng),
        _ => {
            r.author = ["", "Anonymous", "X. Y. Zed"].choose(rng).unwrap().to_string();
            r.pub_date = perturbed_date(rng);
        }
    }
    r
}

fn perturbed_date(rng: &mut ChaCha8Rng) -> Option<PartialDate> {
    if rng.gen_bool(0.1) {
        None
    } else {
        Some(PartialDate::year(rng.gen_range(1890..=1995)))
    }
}

#[test]
fn author_and_date_corruption_never_frees_a_renewed_work() {
    let cfg = MatchConfig::default();
    let rules = ClassifyRules::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    for seed in 0..4 {
        let corpus = SyntheticCorpus::generate(&CorpusSpec::new(800, 400, 0.04, seed));
        let (regs, rens) = normalized(&corpus);
        let index = RenewalIndex::build(rens);
        for reg in &regs {
            let before = classify(reg, &index.match_one(reg, &cfg), &rules);
            if before.basis != PdBasis::RenewalFound {
                continue;
            }
            for _ in 0..10 {
                let corrupted = NormalizedRegistration::new(perturb(&mut rng, &reg.record));
                let after = classify(&corrupted, &index.match_one(&corrupted, &cfg), &rules);
                assert_ne!(after.outcome, PdOutcome::BelievedPublicDomain, "{:?} -> {:?}", reg.record, corrupted.record);
                checked += 1;
            }
        }
    }
    assert!(checked > 1000, "only {checked} perturbations");
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(2000) })]

    #[test]
    fn estimate_decreases_as_either_accuracy_increases(
        a_title in 0.0f64..0.999,
        a_reg in 0.0f64..0.999,
        step in 0.0001f64..0.5,
    ) {
        let profile = |t: f64, r: f64| FieldAccuracyProfile {
            a_title: t, a_reg: r, a_author: 0.9, a_date: 0.9, n_works: 1000,
        };
        let base = estimate_misclassification(&profile(a_title, a_reg)).unwrap().p_exact;
        let t2 = (a_title + step).min(0.9999);
        let r2 = (a_reg + step).min(0.9999);
        prop_assert!(estimate_misclassification(&profile(t2, a_reg)).unwrap().p_exact < base);
        prop_assert!(estimate_misclassification(&profile(a_title, r2)).unwrap().p_exact < base);
    }
}

#[test]
fn extractor_with_corrupted_authors_scores_author_accuracy() {
    let corpus = SyntheticCorpus::generate(&CorpusSpec::new(1000, 0, 0.0, 3));
    let truth: Vec<CopyrightRecord> = corpus
        .registrations
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut r = r.clone();
            r.work_key = Some(format!("w{i:04}"));
            r
        })
        .collect();
    let mut extracted = truth.clone();
    for r in extracted.iter_mut().step_by(10) {
        r.author = format!("{} Corrupted", r.author);
        r.source = RecordSource::Extracted;
    }
    extracted.reverse();
    let profile = evaluate_extractor(&extracted, &truth).unwrap();
    assert_eq!(profile.a_author, 0.90);
    assert_eq!((profile.a_title, profile.a_reg, profile.a_date), (1.0, 1.0, 1.0));
    assert_eq!(profile.n_works, 1000);
}
