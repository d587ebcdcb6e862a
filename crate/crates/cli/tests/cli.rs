//! End-to-end exercises of every subcommand against a small synthetic corpus.

use std::fs;
use std::path::Path;

use gesturekit::corpus::N_PROPERTY_LABELS;
use gesturekit::flow::{init_flow, save_flow, FlowSpec};
use gesturekit_cli::run;

/// d_audio (26 mel bands) + d_text (32 hashed dims).
const D_IN: usize = 58;

fn run_ok(args: &[&str]) {
    let mut argv = vec!["gesturekit"];
    argv.extend(args);
    assert_eq!(run(argv.clone()), 0, "command failed: {argv:?}");
}

fn synth(dir: &Path) {
    run_ok(&[
        "synth",
        "--out",
        dir.to_str().unwrap(),
        "--recordings",
        "4",
        "--duration-s",
        "30",
        "--seed",
        "5",
    ]);
}

#[test]
fn unknown_flag_exits_2_with_usage() {
    assert_eq!(run(["gesturekit", "--definitely-not-a-flag"]), 2);
    assert_eq!(run(["gesturekit", "frobnicate"]), 2);
    assert_eq!(run(["gesturekit", "--help"]), 0);
}

#[test]
fn unknown_tier_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    assert_ne!(
        run([
            "gesturekit",
            "train",
            "--corpus",
            dir.path().to_str().unwrap(),
            "--tier",
            "nonsense",
            "--out",
            dir.path().join("x.ckpt").to_str().unwrap(),
        ]),
        0
    );
}

#[test]
fn synth_validate_features_round() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    synth(&corpus);
    assert!(corpus.join("run_manifest.json").exists());

    run_ok(&["validate", "--corpus", corpus.to_str().unwrap()]);

    let cache = dir.path().join("cache");
    run_ok(&[
        "features",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        cache.to_str().unwrap(),
    ]);
    assert!(cache.join("rec000.feat").exists());
    assert!(cache.join("run_manifest.json").exists());
}

#[test]
fn validate_missing_corpus_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(["gesturekit", "validate", "--corpus", dir.path().join("nope").to_str().unwrap()]),
        1
    );
}

#[test]
fn synth_twice_produces_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    synth(&a);
    synth(&b);
    for name in ["manifest.json", "rec000.audio.raw", "rec000.words.jsonl"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name} differs between identical runs"
        );
    }
}

#[test]
fn baseline_prints_chance_level_macro_f1() {
    run_ok(&["baseline", "--prevalence", "0.5", "--n-frames", "2000", "--n-trials", "50"]);
}

#[test]
fn train_cv_report_generate_chain() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    synth(&corpus);
    let corpus_s = corpus.to_str().unwrap();

    // four classifier checkpoints, tiny and fast
    for tier in ["existence", "category", "semantics", "phase"] {
        let out = dir.path().join(format!("{tier}.ckpt"));
        run_ok(&[
            "train", "--corpus", corpus_s, "--tier", tier, "--out",
            out.to_str().unwrap(), "--epochs", "2", "--channels", "4",
        ]);
        assert!(out.exists());
        assert!(dir.path().join(format!("{tier}.ckpt.manifest.json")).exists());
    }

    // cross-validation summary + baseline + rendered report
    let cv_out = dir.path().join("cv.json");
    run_ok(&[
        "cv", "--corpus", corpus_s, "--tier", "existence", "--k", "2",
        "--epochs", "2", "--channels", "4", "--out", cv_out.to_str().unwrap(),
    ]);
    let base_out = dir.path().join("baseline.json");
    run_ok(&[
        "baseline", "--prevalence", "0.4", "--n-frames", "500", "--n-trials", "20",
        "--out", base_out.to_str().unwrap(),
    ]);
    let report_out = dir.path().join("report.json");
    run_ok(&[
        "report", "--summary", cv_out.to_str().unwrap(), "--baseline",
        base_out.to_str().unwrap(), "--out", report_out.to_str().unwrap(),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_out).unwrap()).unwrap();
    assert_eq!(report["labels"].as_array().unwrap().len(), 1);

    // an identity flow checkpoint conditioned on features + property bits
    let flow_path = dir.path().join("flow.ckpt");
    let flow = init_flow(&FlowSpec::new(6, D_IN + N_PROPERTY_LABELS), 0);
    save_flow(&flow_path, &flow).unwrap();

    let frames = dir.path().join("frames.jsonl");
    run_ok(&[
        "generate",
        "--corpus", corpus_s,
        "--recording", "rec000",
        "--existence", dir.path().join("existence.ckpt").to_str().unwrap(),
        "--category", dir.path().join("category.ckpt").to_str().unwrap(),
        "--semantics", dir.path().join("semantics.ckpt").to_str().unwrap(),
        "--phase", dir.path().join("phase.ckpt").to_str().unwrap(),
        "--flow", flow_path.to_str().unwrap(),
        "--out", frames.to_str().unwrap(),
    ]);
    let lines: Vec<serde_json::Value> = fs::read_to_string(&frames)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 150); // 30 s at 5 fps
    for frame in &lines {
        let gesturing = frame["gesturing"].as_bool().unwrap();
        assert_eq!(frame["pose"].is_null(), !gesturing);
    }

    // re-running generate reproduces the artifact byte for byte
    let frames2 = dir.path().join("frames2.jsonl");
    run_ok(&[
        "generate",
        "--corpus", corpus_s,
        "--recording", "rec000",
        "--existence", dir.path().join("existence.ckpt").to_str().unwrap(),
        "--category", dir.path().join("category.ckpt").to_str().unwrap(),
        "--semantics", dir.path().join("semantics.ckpt").to_str().unwrap(),
        "--phase", dir.path().join("phase.ckpt").to_str().unwrap(),
        "--flow", flow_path.to_str().unwrap(),
        "--out", frames2.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(&frames).unwrap(), fs::read(&frames2).unwrap());
}
