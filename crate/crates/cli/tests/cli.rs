use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_dysalign");

fn base_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/fluent_base.jsonl")
}

fn dysalign(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("DYSALIGN_LOG", "error").output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = dysalign(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn json_lines(path: &str) -> Vec<Value> {
    fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn write_fixture(dir: &Path) -> String {
    let record = serde_json::json!({
        "id": "fixture",
        "ref_text": "references",
        "ref_phonemes": "R EH F ER AH N S IH Z".split(' ').collect::<Vec<_>>(),
        "dys_phonemes": "FILLER-UH R EH S R EH ER AH AH ER AH N S IH IH Z"
            .split(' ')
            .enumerate()
            .map(|(i, s)| serde_json::json!({ "p": s, "start": i as f64 * 0.08, "end": (i + 1) as f64 * 0.08 }))
            .collect::<Vec<_>>(),
        "annotations": [],
    });
    let path = p(dir, "fixture.jsonl");
    fs::write(&path, format!("{record}\n")).unwrap();
    path
}

#[test]
fn simulate_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let base = base_corpus();
    let base = base.to_str().unwrap();
    let (a, b, c) = (p(dir.path(), "a.jsonl"), p(dir.path(), "b.jsonl"), p(dir.path(), "c.jsonl"));
    ok(&["simulate", "--in", base, "--out", &a, "--seed", "7"]);
    ok(&["simulate", "--in", base, "--out", &b, "--seed", "7"]);
    ok(&["simulate", "--in", base, "--out", &c, "--seed", "7", "--jobs", "1"]);
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    assert_eq!(bytes, fs::read(&c).unwrap());

    let d = p(dir.path(), "d.jsonl");
    ok(&["simulate", "--in", base, "--out", &d, "--seed", "8"]);
    assert_ne!(bytes, fs::read(&d).unwrap());
}

#[test]
fn every_output_starts_with_a_header() {
    let dir = tempfile::tempdir().unwrap();
    let base = base_corpus();
    let (sim, stats, ev, rep, dump) = (
        p(dir.path(), "sim.jsonl"),
        p(dir.path(), "stats.csv"),
        p(dir.path(), "events.jsonl"),
        p(dir.path(), "report.csv"),
        p(dir.path(), "dump.jsonl"),
    );
    ok(&["simulate", "--in", base.to_str().unwrap(), "--out", &sim, "--stats", &stats, "--seed", "3"]);
    ok(&["detect", "--in", &sim, "--out", &ev, "--seed", "3"]);
    ok(&["eval", "--pred", &ev, "--gold", &sim, "--report", &rep, "--seed", "3"]);
    ok(&["align", "--in", &sim, "--dump", &dump, "--seed", "3"]);
    for path in [&sim, &ev, &dump] {
        let first = &json_lines(path)[0];
        assert_eq!(first["seed"], 3, "{path}");
        assert!(first["tool_version"].is_string() && first["config_hash"].is_string());
    }
    for path in [&stats, &rep] {
        let text = fs::read_to_string(path).unwrap();
        let first = text.lines().next().unwrap();
        let h: Value = serde_json::from_str(first.strip_prefix("# ").unwrap()).unwrap();
        assert_eq!(h["seed"], 3);
    }
}

#[test]
fn generated_seed_is_printed_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "sim.jsonl");
    let res = ok(&["simulate", "--in", base_corpus().to_str().unwrap(), "--out", &out, "--auto", "5"]);
    let line: Value = serde_json::from_slice(res.stderr.split(|&b| b == b'\n').next().unwrap()).unwrap();
    let seed = line["generated_seed"].as_u64().unwrap();
    assert_eq!(json_lines(&out)[0]["seed"].as_u64(), Some(seed));
}

#[test]
fn lcs_dump_leaves_f_unaligned_and_dtw_does_not() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = write_fixture(dir.path());
    let (lcs, dtw) = (p(dir.path(), "lcs.jsonl"), p(dir.path(), "dtw.jsonl"));
    let common = ["--ref-field", "ref_phonemes", "--hyp-field", "dys_phonemes", "--seed", "1"];
    ok(&[&["align", "--in", &fixture, "--dump", &lcs, "--algo", "lcs"][..], &common[..]].concat());
    ok(&[&["align", "--in", &fixture, "--dump", &dtw, "--algo", "dtw"][..], &common[..]].concat());

    let rec = &json_lines(&lcs)[1];
    assert_eq!(rec["id"], "fixture");
    let spans = rec["spans"].as_array().unwrap();
    assert_eq!(spans.len(), 9);
    assert!(spans[2].is_null());
    assert_eq!(spans[0], serde_json::json!([1, 2]));
    assert!(rec["loss"].is_null());

    let rec = &json_lines(&dtw)[1];
    assert!(!rec["spans"][2].is_null());
}

#[test]
fn csa_dump_reports_a_loss() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = write_fixture(dir.path());
    let out = p(dir.path(), "csa.jsonl");
    ok(&["align", "--in", &fixture, "--dump", &out, "--algo", "csa", "--delta", "0.5", "--seed", "1"]);
    let loss = json_lines(&out)[1]["loss"].as_f64().unwrap();
    assert!(loss.is_finite() && loss < 0.0);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = dysalign(&["simulate", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage"));
    let last: Value = serde_json::from_str(err.lines().last().unwrap()).unwrap();
    assert_eq!(last["error"], "usage");
}

#[test]
fn bad_values_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "x.jsonl");
    let base = base_corpus();
    let base = base.to_str().unwrap();
    let r = dysalign(&["simulate", "--in", base, "--out", &out, "--kinds", "stutter", "--seed", "1"]);
    assert_eq!(r.status.code(), Some(2));
    let r = dysalign(&["align", "--in", base, "--dump", &out, "--delta", "1.5", "--seed", "1"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn bad_data_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "x.jsonl");
    let r = dysalign(&["detect", "--in", &p(dir.path(), "missing.jsonl"), "--out", &out, "--seed", "1"]);
    assert_eq!(r.status.code(), Some(3));
    let bad = p(dir.path(), "bad.jsonl");
    fs::write(&bad, "{\"id\": 1}\n").unwrap();
    let r = dysalign(&["detect", "--in", &bad, "--out", &out, "--seed", "1"]);
    assert_eq!(r.status.code(), Some(3));
    let last: Value =
        serde_json::from_slice(r.stderr.trim_ascii_end().rsplit(|&b| b == b'\n').next().unwrap()).unwrap();
    assert_eq!(last["error"], "data");
}

#[test]
fn pipeline_produces_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let (sim, dump, ev, rep) = (
        p(dir.path(), "sim.jsonl"),
        p(dir.path(), "dump.jsonl"),
        p(dir.path(), "events.jsonl"),
        p(dir.path(), "report.csv"),
    );
    ok(&["simulate", "--in", base_corpus().to_str().unwrap(), "--out", &sim, "--per-kind", "10", "--seed", "11"]);
    ok(&["align", "--in", &sim, "--dump", &dump, "--seed", "11"]);
    assert_eq!(json_lines(&dump).len(), 71);
    ok(&["detect", "--in", &sim, "--out", &ev, "--seed", "11"]);
    let res = ok(&["eval", "--pred", &ev, "--gold", &sim, "--report", &rep, "--seed", "11"]);

    let summary: Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(summary["utterances"], 70);
    assert!(summary["ms"].as_f64().unwrap() >= 0.9);

    let text = fs::read_to_string(&rep).unwrap();
    let mut lines = text.lines().skip(1);
    assert_eq!(lines.next(), Some("metric,kind,value"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().any(|r| r[0] == "ms" && r[1].is_empty()));
    assert!(rows.iter().any(|r| r[0] == "tp" && r[1] == "block"));
}

#[test]
fn fluent_base_yields_no_events() {
    let dir = tempfile::tempdir().unwrap();
    let ev = p(dir.path(), "events.jsonl");
    ok(&["detect", "--in", base_corpus().to_str().unwrap(), "--out", &ev, "--seed", "0"]);
    let lines = json_lines(&ev);
    assert_eq!(lines.len(), 29);
    assert!(lines[1..].iter().all(|l| l["annotations"].as_array().unwrap().is_empty()));
}

#[test]
fn eval_scores_transcriptions_when_present() {
    let dir = tempfile::tempdir().unwrap();
    let rep = p(dir.path(), "report.csv");
    let base = base_corpus();
    ok(&["eval", "--pred", base.to_str().unwrap(), "--gold", base.to_str().unwrap(), "--report", &rep, "--seed", "0"]);
    let text = fs::read_to_string(&rep).unwrap();
    assert!(text.contains("\nframewise_f1,,1\n"));
    assert!(text.contains("\ndper,,0\n"));
    assert!(text.contains("\ndetection_f1_micro,,1\n"));
}

#[test]
fn gesture_fit_writes_summary_and_factors() {
    let dir = tempfile::tempdir().unwrap();
    let input = p(dir.path(), "x.json");
    let rows: Vec<Vec<f64>> = (0..3).map(|c| (0..20).map(|t| 1.0 + ((c * 7 + t * 3) % 5) as f64).collect()).collect();
    fs::write(&input, serde_json::to_string(&rows).unwrap()).unwrap();
    let (out, dict, score) = (p(dir.path(), "fit.jsonl"), p(dir.path(), "dict.gsm"), p(dir.path(), "score.json"));
    ok(&[
        "gesture",
        "fit",
        "--in",
        &input,
        "--out",
        &out,
        "--dict",
        &dict,
        "--score",
        &score,
        "--k",
        "2",
        "--t-window",
        "3",
        "--iters",
        "50",
        "--seed",
        "5",
    ]);
    let lines = json_lines(&out);
    assert_eq!(lines[0]["seed"], 5);
    assert_eq!(lines[1]["iterations"], 50);
    assert!(lines[1]["final_error"].as_f64().unwrap() < 1.0);
    assert_eq!(&fs::read(&dict).unwrap()[..4], b"GSM1");
    let h: Vec<Vec<f64>> = serde_json::from_str(&fs::read_to_string(&score).unwrap()).unwrap();
    assert_eq!((h.len(), h[0].len()), (2, 20));

    let r = dysalign(&["gesture", "fit", "--in", &input, "--out", &out, "--k", "0", "--seed", "5"]);
    assert_eq!(r.status.code(), Some(2));
}
