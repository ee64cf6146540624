//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when a criterion fails for any reason other than a target that
//! the inputs cannot reach.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use chrono::Utc;
use curator_core::config::PipelineConfig;
use curator_core::pd::{
    classify, match_renewals, ClassifyRules, CopyrightRecord, MatchConfig, MatchResult, MatchStage, MatchStatus,
    NormalizedRegistration, NormalizedRenewal, PartialDate, PdOutcome, RecordSource,
};
use curator_core::provenance::{
    aggregate_constituent_licensing, assess_tier, normalize_license, LicenseTable, Tier,
};
use curator_core::release::{assemble_release, AssembleRequest, Store};
use curator_core::scanner::{detect_in_decoded, scan_warc, Execution, ScanConfig, ScanContext};
use curator_core::testkit::biblio::{CorpusSpec, SyntheticCorpus};
use curator_core::testkit::oracle;
use curator_core::testkit::release::{licensed_document, run_random_sequence};
use curator_core::testkit::warc::{injected_page, write_crawl};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

struct Verdict {
    pass: bool,
    detail: String,
    /// Set when the criterion fails only because its target is out of reach
    /// of any correct implementation; the reason is printed.
    unattainable: Option<String>,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
            unattainable: None,
        }
    }
}

type Criterion = (&'static str, fn() -> Verdict);

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn curator(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curator"))
        .args(args)
        .current_dir(dir)
        .env_remove("CURATOR_STORE")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> Result<(), String> {
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))
    }
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn misclassification_estimate() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let out = curator(dir.path(), &["pd", "estimate", "--a-title", "0.9658", "--a-reg", "0.9720", "--n", "424059"]);
    if let Err(e) = ok(&out) {
        return Verdict::new(false, e);
    }
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let p = v["p_exact"].as_f64().unwrap();
    let wrong = v["expected_wrong_exact"].as_f64().unwrap();
    let truncated = v["expected_wrong_paper_style"].as_f64().unwrap();
    let style = v["paper_style"].as_str().unwrap().to_string();

    // Exact decimal product: 0.0342 * 0.0280 = 342 * 280 / 10^8.
    let exact = f64::from(342 * 280) / 1e8;
    let target = 0.00095776;
    let p_ok = (p - target).abs() <= 1e-8;
    let wrong_ok = (wrong - 406.1).abs() <= 0.1;
    let truncated_ok = style == "0.09%" && (truncated - 381.65).abs() < 0.01;
    let correct = (p - exact).abs() < 1e-15;
    let detail = format!(
        "p_exact = {p:.8} (target {target:.8} ± 1e-8: {}), expected_wrong_exact = {wrong:.4} (406.1 ± 0.1: {}), truncated {style} / {truncated:.2} ({})",
        if p_ok { "met" } else { "missed" },
        if wrong_ok { "met" } else { "missed" },
        if truncated_ok { "met" } else { "missed" },
    );
    let mut verdict = Verdict::new(p_ok && wrong_ok && truncated_ok, detail);
    if !p_ok && wrong_ok && truncated_ok && correct && (exact - target).abs() > 1e-8 {
        verdict.unattainable = Some(format!(
            "(1 - 0.9658) * (1 - 0.9720) is exactly {exact:.8}; the target differs by {:.1e}",
            (exact - target).abs()
        ));
    }
    verdict
}

fn classification_suite() -> Verdict {
    let cfg = MatchConfig::default();
    let rules = ClassifyRules::default();
    let mut diverged = 0;
    let mut stages = BTreeMap::new();
    for seed in 1..=3u64 {
        let corpus = SyntheticCorpus::generate(&CorpusSpec::new(1000, 400, 0.04, seed));
        let regs: Vec<_> = corpus.registrations.iter().cloned().map(NormalizedRegistration::new).collect();
        let rens: Vec<_> = corpus.renewals.iter().cloned().map(NormalizedRenewal::new).collect();
        let expected = oracle::match_all(&regs, &rens, &cfg);
        let got = match_renewals(&regs, rens, &cfg);
        for ((reg, e), g) in regs.iter().zip(&expected).zip(&got) {
            let c = classify(reg, g, &rules);
            if e != g || oracle::classify(reg, e, &rules) != (c.outcome, c.basis) {
                diverged += 1;
            }
            for m in g {
                *stages.entry(format!("{:?}/{:?}", m.stage, m.status)).or_insert(0usize) += 1;
            }
        }
    }

    let strategy = (
        proptest::option::weighted(0.95, 1880i32..2000),
        proptest::collection::vec(any::<bool>(), 0..6),
        1900i32..1950,
        1900i32..1960,
        0i32..50,
    );
    let cases = std::cell::Cell::new(0u32);
    let safety = runner(10_000).run(&strategy, |(year, statuses, cutoff, lo, len)| {
        cases.set(cases.get() + 1);
        let reg = NormalizedRegistration::new(
            CopyrightRecord::new("A1", "A Title", "Some Author", year.map(PartialDate::year), RecordSource::Extracted)
                .unwrap(),
        );
        let matches: Vec<MatchResult> = statuses
            .iter()
            .map(|&confirmed| MatchResult {
                registration: reg.key.clone(),
                renewal: "R1".into(),
                stage: MatchStage::Fuzzy,
                score: 0.9,
                title_similarity: 0.9,
                date_window_ok: true,
                status: if confirmed { MatchStatus::Confirmed } else { MatchStatus::Ambiguous },
            })
            .collect();
        let rules = ClassifyRules {
            pre_cutoff_year: cutoff,
            renewal_rule_years: (lo, lo + len),
        };
        let c = classify(&reg, &matches, &rules);
        if statuses.contains(&true) {
            prop_assert_ne!(c.outcome, PdOutcome::BelievedPublicDomain);
        }
        prop_assert_eq!(oracle::classify(&reg, &matches, &rules), (c.outcome, c.basis));
        Ok(())
    });
    let detail = format!(
        "{diverged} divergent classifications over 3 seeded 1000x400 corpora (matches by stage/status {stages:?}); safety over {} cases: {}",
        cases.get(),
        match &safety {
            Ok(()) => "held".to_string(),
            Err(e) => format!("violated: {e}"),
        }
    );
    Verdict::new(diverged == 0 && safety.is_ok() && cases.get() >= 10_000 && ["RegIdExact", "TitleAuthorExact", "Fuzzy"].iter().all(|st| stages.keys().any(|k| k.starts_with(st))), detail)
}

fn tier_truth_table() -> Verdict {
    // (openly licensed, open access, replicable) -> tier
    let table = [
        ((true, true, true), Tier::Tier3),
        ((false, true, true), Tier::Tier2),
        ((true, false, true), Tier::Tier1),
        ((false, false, true), Tier::Tier1),
        ((true, true, false), Tier::Unclassified),
        ((false, true, false), Tier::Unclassified),
        ((true, false, false), Tier::Unclassified),
        ((false, false, false), Tier::Unclassified),
    ];
    let mismatches: Vec<String> = table
        .iter()
        .filter(|((l, a, r), tier)| assess_tier(*l, *a, *r).tier != *tier)
        .map(|((l, a, r), tier)| format!("({l},{a},{r}) expected {tier:?}"))
        .collect();

    // Open dataset-level license over constituents that are not all open.
    let dataset = normalize_license("ODC-By-1.0").unwrap();
    let docs = vec![
        licensed_document(0, "https://creativecommons.org/licenses/by/4.0/").0,
        licensed_document(1, "https://creativecommons.org/licenses/by-nc/4.0/").0,
    ];
    let aggregate = aggregate_constituent_licensing(&dataset, &docs).unwrap();

    // The same case through a sealed release.
    let dir = tempfile::tempdir().unwrap();
    let store = Store::init(dir.path()).unwrap();
    let mut config = PipelineConfig::default();
    config.release.dataset_license = Some("ODC-By-1.0".into());
    config.release.open_access = true;
    config.release.replicable = true;
    let writer = store.writer().unwrap();
    writer
        .put_documents((0..2).map(|i| {
            licensed_document(i, ["https://creativecommons.org/licenses/by/4.0/", "https://creativecommons.org/licenses/by-nc/4.0/"][i])
        }))
        .unwrap();
    let manifest = assemble_release(
        &writer,
        AssembleRequest {
            doc_ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
            parent: None,
            label: "v1".into(),
            created_at: "2024-06-01T00:00:00Z".parse().unwrap(),
            config: &config,
            pipeline_counts: BTreeMap::new(),
        },
    )
    .unwrap();
    let released = &manifest.assessment;
    let dolma_ok = !aggregate && !released.openly_licensed && released.tier == Tier::Tier2;
    Verdict::new(
        mismatches.is_empty() && dolma_ok,
        format!(
            "{}/8 combinations match; open dataset license over a non-open constituent: openly_licensed = {}, release tier {:?}",
            8 - mismatches.len(),
            released.openly_licensed,
            released.tier
        ),
    )
}

fn scanner_fixtures() -> Verdict {
    let manifest: Value = serde_json::from_str(&fs::read_to_string(fixture("pages30.manifest.json")).unwrap()).unwrap();
    let mut expected: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
    for p in manifest["pages"].as_array().unwrap() {
        let mut d: Vec<(String, String)> = p["detections"]
            .as_array()
            .unwrap()
            .iter()
            .map(|d| (d["license"].as_str().unwrap().to_string(), d["method"].as_str().unwrap().to_string()))
            .collect();
        d.sort();
        expected.insert(p["url"].as_str().unwrap().to_string(), d);
    }

    let config = ScanConfig {
        keep_undetected: true,
        keep_quality_rejected: true,
        ..ScanConfig::default()
    };
    let ctx = ScanContext {
        config: &config,
        config_hash: "acceptance".into(),
        table: LicenseTable::builtin(),
        ingested_at: Utc::now(),
    };
    let mut found: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
    let mut evidence_ok = true;
    let report = scan_warc(fs::File::open(fixture("pages30.warc")).unwrap(), &ctx, Execution::Serial, |d| {
        let mut got: Vec<(String, String)> = d
            .document
            .licenses
            .iter()
            .map(|l| {
                let method = serde_json::to_value(l.method()).unwrap().as_str().unwrap().to_string();
                (l.tag().spdx_id.clone(), method)
            })
            .collect();
        evidence_ok &= d.document.licenses.iter().all(|l| l.evidence().verify_against(&d.source.content));
        got.sort();
        found.insert(d.document.source_url.clone(), got);
        Ok(())
    })
    .unwrap();

    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (url, exp) in &expected {
        let mut got = found.get(url).cloned().unwrap_or_default();
        for e in exp {
            match got.iter().position(|g| g == e) {
                Some(i) => {
                    got.remove(i);
                    tp += 1;
                }
                None => fneg += 1,
            }
        }
        fp += got.len();
    }
    fp += found.keys().filter(|u| !expected.contains_key(*u)).map(|u| found[u].len()).sum::<usize>();
    let skipped = &manifest["skipped"];
    let skips_ok = report.skipped_by_type == skipped["type"].as_u64().unwrap()
        && report.skipped_by_status == skipped["status"].as_u64().unwrap()
        && report.skipped_by_content_type == skipped["content_type"].as_u64().unwrap()
        && report.skipped_decode == skipped["decode"].as_u64().unwrap();
    let precision = tp as f64 / (tp + fp).max(1) as f64;
    let recall = tp as f64 / (tp + fneg).max(1) as f64;

    let cases = std::cell::Cell::new(0u32);
    let sites = std::cell::Cell::new(0usize);
    let injected = runner(1000).run(&(any::<u64>(), 0usize..5), |(seed, injections)| {
        cases.set(cases.get() + 1);
        let (html, expected) = injected_page(seed, injections);
        sites.set(sites.get() + expected.len());
        let detections = detect_in_decoded(&html, "https://example.org/page", LicenseTable::builtin());
        let got: std::collections::BTreeSet<_> = detections
            .iter()
            .map(|d| (d.evidence().offset, d.tag().spdx_id.clone(), d.method()))
            .collect();
        prop_assert_eq!(got.len(), detections.len());
        prop_assert_eq!(got, expected);
        Ok(())
    });
    Verdict::new(
        precision == 1.0 && recall == 1.0 && evidence_ok && skips_ok && expected.len() >= 30 && injected.is_ok() && cases.get() >= 1000,
        format!(
            "{} pages, {tp} expected detections: precision {precision:.3}, recall {recall:.3}, skipped records as listed: {skips_ok}, evidence verifies: {evidence_ok}; injected markers: {} cases, {} sites, {}",
            expected.len(),
            cases.get(),
            sites.get(),
            match &injected {
                Ok(()) => "all and only injection sites found".to_string(),
                Err(e) => format!("mismatch: {e}"),
            }
        ),
    )
}

/// scan, gate and assemble the fixture corpus in `dir`; returns the store.
fn pipeline(dir: &Path) -> Result<PathBuf, String> {
    let warc = fixture("pages30.warc");
    ok(&curator(dir, &["scan", "--warc", warc.to_str().unwrap(), "--out", "scan"]))?;
    fs::write(
        dir.join("robots.jsonl"),
        "{\"origin\":\"https://fixtures1.example\",\"fetched_at\":\"2024-03-01T00:00:00Z\",\"text\":\"User-agent: *\\nDisallow: /url-in-\\n\"}\n",
    )
    .unwrap();
    fs::write(dir.join("optout.txt"), "https://fixtures2.example/rel-area\n").unwrap();
    ok(&curator(
        dir,
        &["gate", "--documents", "scan/documents.jsonl", "--robots", "robots.jsonl", "--optout", "optout.txt", "--out", "gate"],
    ))?;
    let store = dir.join("store");
    ok(&curator(
        dir,
        &[
            "--store",
            store.to_str().unwrap(),
            "assemble",
            "--label",
            "v1",
            "--documents",
            "gate/documents.jsonl",
            "--sources",
            "scan/sources.jsonl",
            "--signals",
            "gate/signals.jsonl",
            "--scan-report",
            "scan/scan-report.json",
            "--gate-report",
            "gate/gate-report.json",
            "--open-access",
            "true",
        ],
    ))?;
    Ok(store)
}

fn manifest_files(store: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(store.join("manifests"))
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect()
}

fn determinism_and_audit() -> Verdict {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let stores = match (pipeline(a.path()), pipeline(b.path())) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => return Verdict::new(false, e),
    };
    let metadata = |dir: &Path, store: &Path| curator(dir, &["--store", store.to_str().unwrap(), "metadata", "--release", "v1"]);
    let (ma, mb) = (metadata(a.path(), &stores.0), metadata(b.path(), &stores.1));
    let manifests_equal = manifest_files(&stores.0) == manifest_files(&stores.1);
    let metadata_equal = ma.status.success() && ma.stdout == mb.stdout;

    let audit = |store: &Path| curator(a.path(), &["--store", store.to_str().unwrap(), "audit"]);
    let clean = audit(&stores.0).status.code() == Some(0);

    let (name, original) = manifest_files(&stores.0).into_iter().next().unwrap();
    let path = stores.0.join("manifests").join(&name);
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut flagged = 0;
    const CASES: usize = 50;
    for case in 0..CASES {
        let mut bytes = original.clone();
        let at = rng.gen_range(0..bytes.len());
        bytes[at] = if case % 2 == 0 {
            // Another printable character.
            loop {
                let c = rng.gen_range(0x20u8..0x7f);
                if c != bytes[at] {
                    break c;
                }
            }
        } else {
            bytes[at] ^ rng.gen_range(1u8..=255)
        };
        fs::write(&path, &bytes).unwrap();
        let out = audit(&stores.0);
        let violations = serde_json::from_slice::<Value>(&out.stdout)
            .map(|v| v["violations"].as_array().map_or(0, Vec::len))
            .unwrap_or(0);
        if out.status.code() == Some(1) && violations > 0 {
            flagged += 1;
        }
    }
    fs::write(&path, &original).unwrap();
    let restored = audit(&stores.0).status.code() == Some(0);
    Verdict::new(
        manifests_equal && metadata_equal && clean && restored && flagged == CASES,
        format!(
            "manifests byte-identical: {manifests_equal}, metadata byte-identical: {metadata_equal}, untampered audit passes: {clean}, single-byte tamperings flagged: {flagged}/{CASES}"
        ),
    )
}

fn removal_propagation() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut totals = (0, 0, 0, 0, 0);
    const SEQUENCES: u64 = 1000;
    for seed in 0..SEQUENCES {
        let dir = tempfile::tempdir().unwrap();
        let docs = rng.gen_range(2..10);
        let steps = rng.gen_range(2..14);
        match run_random_sequence(dir.path(), seed, docs, steps) {
            Ok(s) => {
                totals.0 += s.steps;
                totals.1 += s.releases;
                totals.2 += s.removals;
                totals.3 += s.rejected_assemblies;
                totals.4 += s.lookups;
            }
            Err(e) => return Verdict::new(false, format!("sequence {seed}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    Verdict::new(
        elapsed < Duration::from_secs(60),
        format!(
            "{SEQUENCES} sequences, {} steps: {} releases, {} removals, {} rejected assemblies, {} membership lookups; all invariants held in {:.1}s (limit 60s)",
            totals.0,
            totals.1,
            totals.2,
            totals.3,
            totals.4,
            elapsed.as_secs_f64()
        ),
    )
}

fn timed_scan(dir: &Path, warc: &Path, out: &str, serial: bool) -> Result<Duration, String> {
    let mut args = vec!["scan", "--warc", warc.to_str().unwrap(), "--out", out];
    if serial {
        args.push("--serial");
    }
    let start = Instant::now();
    ok(&curator(dir, &args))?;
    Ok(start.elapsed())
}

fn throughput() -> Verdict {
    const TARGET: usize = 100 * 1024 * 1024;
    let dir = tempfile::tempdir().unwrap();
    let warc = dir.path().join("crawl.warc.gz");
    let (records, bytes, html) = write_crawl(&mut BufWriter::new(fs::File::create(&warc).unwrap()), 7, TARGET).unwrap();
    let (parallel, serial) = match (
        timed_scan(dir.path(), &warc, "parallel", false),
        timed_scan(dir.path(), &warc, "serial", true),
    ) {
        (Ok(p), Ok(s)) => (p, s),
        (Err(e), _) | (_, Err(e)) => return Verdict::new(false, e),
    };
    let same = ["documents.jsonl", "sources.jsonl", "scan-report.json"]
        .iter()
        .all(|f| fs::read(dir.path().join("parallel").join(f)).unwrap() == fs::read(dir.path().join("serial").join(f)).unwrap());
    let emitted = fs::read_to_string(dir.path().join("serial/documents.jsonl")).unwrap().lines().count();
    let limit = Duration::from_secs(60);
    let mb = bytes as f64 / (1024.0 * 1024.0);
    Verdict::new(
        parallel < limit && serial < limit && same,
        format!(
            "{mb:.1} MiB gzipped ({records} records, {:.0} MiB of HTML, {emitted} documents emitted) on {} cpu(s): parallel {:.1}s ({:.1} MiB/s), serial {:.1}s; outputs identical: {same}",
            html as f64 / (1024.0 * 1024.0),
            std::thread::available_parallelism().map_or(1, |n| n.get()),
            parallel.as_secs_f64(),
            mb / parallel.as_secs_f64(),
            serial.as_secs_f64()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("misclassification estimate", misclassification_estimate),
        ("classification against brute force", classification_suite),
        ("tier truth table", tier_truth_table),
        ("license scanner fixtures", scanner_fixtures),
        ("determinism and audit", determinism_and_audit),
        ("removal propagation", removal_propagation),
        ("scan throughput", throughput),
    ];
    let mut regressions = 0;
    let mut unattainable = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::new(false, format!("panicked: {msg}"))
        });
        println!(
            "criterion {} {name}: {} [{:.1}s] {}",
            i + 1,
            if verdict.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            verdict.detail
        );
        if !verdict.pass {
            match &verdict.unattainable {
                Some(reason) => {
                    println!("    target not attainable: {reason}");
                    unattainable += 1;
                }
                None => regressions += 1,
            }
        }
    }
    let passed = criteria.len() - regressions - unattainable;
    println!("acceptance: {passed} passed, {} failed ({unattainable} with unattainable targets)", regressions + unattainable);
    if regressions > 0 {
        std::process::exit(1);
    }
}
