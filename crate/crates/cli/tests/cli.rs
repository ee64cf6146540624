use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn curator(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curator"))
        .args(args)
        .current_dir(dir)
        .env_remove("CURATOR_STORE")
        .env("TMPDIR", dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn estimate_prints_exact_and_rounded_figures() {
    let dir = tempfile::tempdir().unwrap();
    let out = curator(dir.path(), &["pd", "estimate", "--a-title", "0.9658", "--a-reg", "0.9720", "--n", "424059"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    // (1 - 0.9658) * (1 - 0.9720) = 0.0342 * 0.028
    assert!((v["p_exact"].as_f64().unwrap() - 0.0009576).abs() < 1e-12);
    assert!((v["expected_wrong_exact"].as_f64().unwrap() - 406.0789).abs() < 1e-3);
    assert_eq!(v["paper_style"], "0.09%");
    assert!((v["expected_wrong_paper_style"].as_f64().unwrap() - 381.6531).abs() < 1e-6);
    assert!(v["a_author"].is_null());
}

#[test]
fn unknown_flag_prints_usage_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = curator(dir.path(), &["scan", "--warc", "x.warc", "--out", "o", "--no-such-flag"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage:"));
    let out = curator(dir.path(), &["frobnicate"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&curator(dir.path(), &["--help"])), 0);
    assert_eq!(code(&curator(dir.path(), &["--version"])), 0);
    assert_eq!(code(&curator(dir.path(), &["pd", "--help"])), 0);
}

#[test]
fn scan_example_emits_three_documents_and_a_run_report() {
    let dir = tempfile::tempdir().unwrap();
    let warc = fixture("cc10.warc");
    let out = curator(dir.path(), &["scan", "--warc", warc.to_str().unwrap(), "--out", "out"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let docs = lines(&dir.path().join("out/documents.jsonl"));
    assert_eq!(docs.len(), 3);
    let urls: Vec<&str> = docs.iter().map(|d| d["provenance"]["source_url"].as_str().unwrap()).collect();
    assert_eq!(
        urls,
        ["https://cc10.example/article/2", "https://cc10.example/article/5", "https://cc10.example/article/9"]
    );
    let report = read_json(&dir.path().join("out/scan-report.json"));
    assert_eq!(report["totals"]["records_read"], 10);
    assert_eq!(report["totals"]["emitted"], 3);

    let run = read_json(&dir.path().join("out/run-report.json"));
    assert_eq!(run["command"], "scan");
    assert_eq!(run["exit_code"], 0);
    assert_eq!(run["inputs"][0]["bytes"], fs::metadata(&warc).unwrap().len());
    assert_eq!(run["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(run["counters"]["scan"]["emitted"], 3);
    assert_eq!(run["config_hash"], report["config_hash"]);
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = curator(dir.path(), &["scan", "--warc", "nope.warc", "--out", "out"]);
    assert_eq!(code(&out), 2);
    let run = read_json(&dir.path().join("out/run-report.json"));
    assert_eq!(run["exit_code"], 2);
    assert!(run["error"].as_str().unwrap().contains("nope.warc"));
}

#[test]
fn invalid_configuration_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let regs = fixture("registrations.csv");
    let rens = fixture("renewals.csv");
    let base = ["pd", "match", "--registrations", regs.to_str().unwrap(), "--renewals", rens.to_str().unwrap(), "--out", "m"];
    let mut args = base.to_vec();
    args.extend(["--threshold", "1.5"]);
    assert_eq!(code(&curator(dir.path(), &args)), 1);
    let mut args = base.to_vec();
    args.extend(["--set", "pd.matching.nonsense=3"]);
    assert_eq!(code(&curator(dir.path(), &args)), 1);
    fs::write(dir.path().join("bad.toml"), "[pd.matching\nthreshold = ").unwrap();
    let mut args = base.to_vec();
    args.extend(["--config", "bad.toml"]);
    assert_eq!(code(&curator(dir.path(), &args)), 1);
}

#[test]
fn flags_override_file_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("curator.toml"),
        "[pd.matching]\nthreshold = 0.9\nambiguity_band = 0.02\n",
    )
    .unwrap();
    let regs = fixture("registrations.csv");
    let rens = fixture("renewals.csv");
    let args = [
        "--config",
        "curator.toml",
        "pd",
        "match",
        "--registrations",
        regs.to_str().unwrap(),
        "--renewals",
        rens.to_str().unwrap(),
        "--threshold",
        "0.8",
        "--out",
        "m",
    ];
    let out = curator(dir.path(), &args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("m/match-report.json"));
    assert_eq!(report["config"]["threshold"], 0.8);
    assert_eq!(report["config"]["ambiguity_band"], 0.02);
    assert_eq!(report["config"]["renewal_window_years"], serde_json::json!([19, 29]));
}

#[test]
fn classify_fixture_outcomes_and_manual_decisions() {
    let dir = tempfile::tempdir().unwrap();
    let regs = fixture("registrations.csv");
    let rens = fixture("renewals.csv");
    let run = |extra: &[&str]| {
        let mut args = vec!["pd", "classify", "--registrations", regs.to_str().unwrap(), "--renewals", rens.to_str().unwrap()];
        args.extend_from_slice(extra);
        curator(dir.path(), &args)
    };
    let out = run(&["--out", "c1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("c1/classify-report.json"));
    assert_eq!(report["outcomes"]["excluded"], 2);
    assert_eq!(report["outcomes"]["believed_public_domain"], 2);
    assert_eq!(report["outcomes"]["requires_investigation"], 2);
    assert_eq!(report["by_basis"]["renewal-found"], 1);
    assert_eq!(report["by_basis"]["out-of-rule-range"], 1);
    assert_eq!(report["by_basis"]["pre-cutoff-year"], 1);
    assert_eq!(report["by_basis"]["no-renewal-found"], 1);
    assert_eq!(report["by_basis"]["missing-pub-date"], 1);
    assert_eq!(report["by_basis"]["ambiguous-match"], 1);
    assert_eq!(report["ingest"]["renewals"]["rejected"], 1);
    assert_eq!(lines(&dir.path().join("c1/rejected-renewals.jsonl")).len(), 1);

    // The lighthouse log renewal is same title, different author and far
    // outside the window: ambiguous until a reviewer rules on it.
    let triage = lines(&dir.path().join("c1/triage.jsonl"));
    let ambiguous: Vec<&Value> = triage.iter().filter(|t| t["basis"] == "ambiguous-match").collect();
    assert_eq!(ambiguous.len(), 1);
    assert_eq!(ambiguous[0]["candidates"][0]["renewal"]["renewal_id"], "R2");
    let key = ambiguous[0]["registration_key"].as_str().unwrap();
    fs::write(
        dir.path().join("decisions.jsonl"),
        format!("{{\"registration_key\":\"{key}\",\"renewal_id\":\"R2\",\"verdict\":\"different-work\"}}\n"),
    )
    .unwrap();
    let out = run(&["--decisions", "decisions.jsonl", "--out", "c2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("c2/classify-report.json"));
    assert_eq!(report["decisions_applied"], 1);
    assert_eq!(report["outcomes"]["believed_public_domain"], 3);
    assert_eq!(report["by_basis"]["no-renewal-found"], 2);
    assert!(report["by_basis"].get("ambiguous-match").is_none());
}

#[test]
fn evaluate_extractor_reports_field_accuracies() {
    let dir = tempfile::tempdir().unwrap();
    let truth = "work_key,reg_id,title,author,pub_year\nw1,A1,Alpha,Ann Lee,1930\nw2,A2,Beta,Bo Ray,1931\nw3,A3,Gamma,Cy Day,1932\nw4,A4,Delta,Di Fox,1933\n";
    let extracted = "work_key,reg_id,title,author,pub_year\nw1,A1,Alpha,Ann Lee,1930\nw2,A7,Beta,Bo Ray,1931\nw3,A3,Gamna,Cy Day,1932\nw4,A9,Deita,Di Fox,1938\n";
    fs::write(dir.path().join("truth.csv"), truth).unwrap();
    fs::write(dir.path().join("extracted.csv"), extracted).unwrap();
    let out = curator(
        dir.path(),
        &["pd", "evaluate-extractor", "--extracted", "extracted.csv", "--ground-truth", "truth.csv", "--out", "eval/report.json"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&dir.path().join("eval/report.json"));
    assert_eq!(v["profile"]["a_title"], 0.5);
    assert_eq!(v["profile"]["a_reg"], 0.5);
    assert_eq!(v["profile"]["a_author"], 1.0);
    assert_eq!(v["profile"]["a_date"], 0.75);
    assert_eq!(v["estimate"]["p_exact"], 0.25);
    assert_eq!(v["estimate"]["expected_wrong_exact"], 1.0);
    assert_eq!(stdout_json(&out), v);
}

/// scan, gate and assemble the hand-built corpus into a store under `dir`.
fn build_store(dir: &Path) -> PathBuf {
    let warc = fixture("pages30.warc");
    let out = curator(dir, &["scan", "--warc", warc.to_str().unwrap(), "--out", "scan"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    fs::write(
        dir.join("robots.jsonl"),
        "{\"origin\":\"https://fixtures1.example\",\"fetched_at\":\"2024-03-01T00:00:00Z\",\"text\":\"User-agent: *\\nDisallow: /url-in-\\n\"}\n",
    )
    .unwrap();
    fs::write(dir.join("optout.txt"), "# takedown list\nhttps://fixtures2.example/rel-area\n").unwrap();
    let out = curator(
        dir,
        &["gate", "--documents", "scan/documents.jsonl", "--robots", "robots.jsonl", "--optout", "optout.txt", "--out", "gate"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let store = dir.join("store");
    let out = curator(
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
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    store
}

#[test]
fn lookup_of_unknown_url_is_absent() {
    let dir = tempfile::tempdir().unwrap();
    let store = build_store(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_curator"))
        .args(["lookup", "--release", "v1", "--url", "https://never-seen.example/"])
        .current_dir(dir.path())
        .env("CURATOR_STORE", &store)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["status"], "absent");
    // Without a store the lookup cannot run.
    assert_eq!(code(&curator(dir.path(), &["lookup", "--release", "v1", "--url", "https://x.example/"])), 1);
}

#[test]
fn gated_documents_stay_out_and_removals_propagate() {
    let dir = tempfile::tempdir().unwrap();
    let store = build_store(dir.path());
    let s = store.to_str().unwrap();
    let lookup = |release: &str, url: &str| {
        let out = curator(dir.path(), &["--store", s, "lookup", "--release", release, "--url", url]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        stdout_json(&out)["status"].as_str().unwrap().to_string()
    };
    assert_eq!(lookup("v1", "https://fixtures1.example/url-in-comment"), "absent");
    assert_eq!(lookup("v1", "https://fixtures2.example/rel-area"), "absent");
    assert_eq!(lookup("v1", "https://fixtures0.example/rel-a"), "present");

    let out = curator(
        dir.path(),
        &["--store", s, "remove", "--url", "https://fixtures0.example/rel-a", "--reason", "optout", "--request-ref", "T-1"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(lookup("v1", "https://fixtures0.example/rel-a"), "removed");

    let out = curator(dir.path(), &["--store", s, "assemble", "--label", "v2", "--from-release", "v1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout_json(&out);
    assert_eq!(summary["tombstones_applied"], 1);
    assert_eq!(lookup("v2", "https://fixtures0.example/rel-a"), "removed");

    // Re-adding the removed document is refused.
    let out = curator(dir.path(), &["--store", s, "assemble", "--label", "v3", "--documents", "gate/documents.jsonl"]);
    assert_eq!(code(&out), 1);

    let out = curator(dir.path(), &["--store", s, "audit"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(stdout_json(&out)["violations"], serde_json::json!([]));
    let runs = fs::read_dir(store.join("runs")).unwrap().count();
    assert!(runs >= 5, "{runs} run reports");
}

#[test]
fn audit_flags_a_tampered_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let store = build_store(dir.path());
    let s = store.to_str().unwrap();
    let manifest = fs::read_dir(store.join("manifests"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "json"))
        .unwrap();
    let text = fs::read_to_string(&manifest).unwrap();
    fs::write(&manifest, text.replacen("\"label\": \"v1\"", "\"label\": \"v9\"", 1).replacen("\"label\":\"v1\"", "\"label\":\"v9\"", 1))
        .unwrap();
    let out = curator(dir.path(), &["--store", s, "audit"]);
    assert_eq!(code(&out), 1);
    assert!(!stdout_json(&out)["violations"].as_array().unwrap().is_empty());
}

#[test]
fn datasheet_and_metadata_render_for_a_release() {
    let dir = tempfile::tempdir().unwrap();
    let store = build_store(dir.path());
    let s = store.to_str().unwrap();
    let out = curator(dir.path(), &["--store", s, "datasheet", "--release", "v1"]);
    assert_eq!(code(&out), 0);
    let sheet = String::from_utf8(out.stdout).unwrap();
    assert!(sheet.starts_with("# Datasheet"));
    let out = curator(dir.path(), &["--store", s, "metadata", "--release", "v1", "--out", "meta/v1.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let meta = read_json(&dir.path().join("meta/v1.json"));
    assert!(meta.is_object());
    let out = curator(dir.path(), &["--store", s, "datasheet", "--release", "v404"]);
    assert_eq!(code(&out), 1);
}
