use curator_core::testkit::release::run_random_sequence;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(100) })]

    #[test]
    fn random_histories_keep_release_invariants(seed in any::<u64>(), docs in 1usize..10, steps in 1usize..10) {
        let dir = tempfile::tempdir().unwrap();
        let stats = run_random_sequence(dir.path(), seed, docs, steps);
        prop_assert!(stats.is_ok(), "{}", stats.unwrap_err());
    }
}

#[test]
fn histories_exercise_every_path() {
    let mut totals = (0, 0, 0, 0);
    for seed in 0..40 {
        let dir = tempfile::tempdir().unwrap();
        let s = run_random_sequence(dir.path(), seed, 6, 12).unwrap();
        totals.0 += s.releases;
        totals.1 += s.removals;
        totals.2 += s.rejected_assemblies;
        totals.3 += s.lookups;
    }
    println!("releases {} removals {} rejected {} lookups {}", totals.0, totals.1, totals.2, totals.3);
    assert!(totals.0 > 100 && totals.1 > 100 && totals.2 > 10 && totals.3 > 1000);
}
