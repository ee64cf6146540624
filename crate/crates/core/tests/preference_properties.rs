use chrono::{DateTime, Utc};
use curator_core::preference::{
    apply_optout, gate_documents, parse_optout, parse_robots, Decision, RobotsSnapshot, RobotsSnapshots, SignalLog,
};
use curator_core::provenance::{AcquisitionMethod, DocumentRecord, ProvenanceRecord};
use proptest::prelude::*;

fn t() -> DateTime<Utc> {
    "2024-05-01T00:00:00Z".parse().unwrap()
}

fn doc(url: &str) -> DocumentRecord {
    DocumentRecord::new(&format!("text of {url}"), ProvenanceRecord::new(url, t(), AcquisitionMethod::WarcCrawl, "c"))
}

/// Plain prefix rules: longest pattern wins, allow wins ties, no match
/// includes.
fn reference_decision(rules: &[(bool, String)], path: &str) -> Decision {
    let mut best: Option<(usize, bool)> = None;
    for (allow, pattern) in rules {
        if !path.starts_with(pattern.as_str()) {
            continue;
        }
        best = match best {
            Some((len, a)) if len > pattern.len() || (len == pattern.len() && (a || !allow)) => Some((len, a)),
            _ => Some((pattern.len(), *allow)),
        };
    }
    match best {
        Some((_, false)) => Decision::Exclude,
        _ => Decision::Include,
    }
}

fn arb_rules() -> impl Strategy<Value = Vec<(bool, String)>> {
    proptest::collection::vec((any::<bool>(), "/[ab/]{0,4}"), 0..8)
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(2000) })]

    #[test]
    fn robots_evaluation_is_pure_and_longest_match(rules in arb_rules(), path in "/[ab/]{0,6}") {
        let mut text = String::from("User-agent: *\n");
        for (allow, pattern) in &rules {
            text.push_str(if *allow { "Allow: " } else { "Disallow: " });
            text.push_str(pattern);
            text.push('\n');
        }
        let policy = parse_robots(&text, "https://a.example");
        let first = policy.evaluate("curator", &path);
        let again = parse_robots(&text, "https://a.example").evaluate("curator", &path);
        prop_assert_eq!(&first, &again);
        prop_assert_eq!(&first, &policy.evaluate("curator", &path));
        prop_assert_eq!(first.decision, reference_decision(&rules, &path));
    }
}

fn corpus(paths: &[String]) -> Vec<DocumentRecord> {
    let mut urls: Vec<String> = paths.iter().map(|p| format!("https://a.example{p}")).collect();
    urls.sort();
    urls.dedup();
    urls.iter().map(|u| doc(u)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(500) })]

    #[test]
    fn optout_is_idempotent_and_fully_signalled(
        paths in proptest::collection::vec("/[ab]{1,2}/[ab]{0,2}", 1..20),
        entries in proptest::collection::vec("/[ab]{1,2}/[ab]{0,2}", 0..6),
    ) {
        let docs = corpus(&paths);
        let list_text: String = entries.iter().map(|e| format!("https://a.example{e}\n")).collect();
        let list = parse_optout(&list_text, "list-1");
        let first = apply_optout(docs.clone(), &list, t());
        prop_assert_eq!(first.included.len() + first.excluded.len(), docs.len());
        prop_assert_eq!(first.excluded.len(), first.signals.len());

        let mut rerun_input = first.included.clone();
        rerun_input.extend(first.excluded.clone());
        let second = apply_optout(rerun_input, &list, t());
        let ids = |v: &[DocumentRecord]| {
            let mut ids: Vec<String> = v.iter().map(|d| d.doc_id.clone()).collect();
            ids.sort();
            ids
        };
        prop_assert_eq!(ids(&first.included), ids(&second.included));
        prop_assert_eq!(ids(&first.excluded), ids(&second.excluded));
        for d in &second.excluded {
            prop_assert_eq!(d.signals.len(), 1);
        }
        let mut log: SignalLog = first.signals.iter().cloned().collect();
        let before = log.len();
        for s in second.signals {
            prop_assert!(!log.append(s));
        }
        prop_assert_eq!(log.len(), before);
    }

    #[test]
    fn gate_exclusions_equal_exclude_signals(
        paths in proptest::collection::vec("/[ab]{1,2}/[ab]{0,2}", 1..20),
        disallow in proptest::collection::vec("/[ab]{1,2}", 0..3),
        entries in proptest::collection::vec("/[ab]{1,2}/", 0..3),
    ) {
        let docs = corpus(&paths);
        let mut robots = RobotsSnapshots::default();
        let text: String = std::iter::once("User-agent: *\n".to_string())
            .chain(disallow.iter().map(|d| format!("Disallow: {d}\n")))
            .collect();
        robots.insert(&RobotsSnapshot { origin: "https://a.example".into(), fetched_at: Some(t()), text }).unwrap();
        let list_text: String = entries.iter().map(|e| format!("https://a.example{e}\n")).collect();
        let list = parse_optout(&list_text, "list-1");
        let out = gate_documents(docs.clone(), &robots, Some(&list), "curator", t());
        prop_assert!(out.report.reconciles());
        prop_assert_eq!(out.excluded.len(), out.log.exclusions().count());
        prop_assert_eq!(out.included.len() + out.excluded.len(), docs.len());
        for d in &out.excluded {
            prop_assert_eq!(d.signals.iter().filter(|s| s.decision == Decision::Exclude).count(), 1);
        }
        for d in &out.included {
            prop_assert!(d.signals.iter().all(|s| s.decision == Decision::Include));
        }
    }
}
