//! Command-line surface for offline experiments: corpus validation and
//! synthesis, feature caching, training, cross-validation, baselines, report
//! rendering and end-to-end generation.
//!
//! Every artifact-writing command emits a run manifest next to its output so
//! a run can be reproduced exactly.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use gesturekit::corpus::{
    load_corpus, make_synthetic_corpus, prevalence, rasterize, save_corpus, AnnotatedRecording,
    GesturePropertySchema, PrevalenceScope, SyntheticSpec, Tier,
};
use gesturekit::eval::{
    cross_validate, random_guess_baseline, render_report, BaselineMode, BaselineResult, CvInput,
    TierSummary,
};
use gesturekit::features::{
    extract_features, save_feature_cache, AudioFeatureConfig, FrameFeatures, HashingEmbedder,
};
use gesturekit::flow::load_flow;
use gesturekit::models::{load_params, save_params, train, DilatedConvSpec, TrainConfig};
use gesturekit::pipeline::{gesture_frequency, run_on_features, PipelineConfig, PipelineModels};
use gesturekit::windows::{build_examples, plan_folds, FrameFilter, WindowSpec};

const FPS: f64 = 5.0;

#[derive(Parser)]
#[command(name = "gesturekit", version, about = "speech-to-gesture-property toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a corpus directory and list per-recording problems.
    Validate {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Generate a synthetic corpus with planted, separable labels.
    Synth(SynthArgs),
    /// Extract frame features for every recording into a cache directory.
    Features {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one classifier tier on a whole corpus.
    Train(TrainArgs),
    /// Speaker-disjoint cross-validation of one tier.
    Cv(CvArgs),
    /// Prevalence-matched random-guess baseline.
    Baseline(BaselineArgs),
    /// Join a cross-validation summary with a baseline into a report table.
    Report {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full pipeline on one recording and write JSON-lines frames.
    Generate(GenerateArgs),
}

#[derive(Args, Serialize)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    recordings: usize,
    #[arg(long, default_value_t = 60.0)]
    duration_s: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8000)]
    sample_rate_hz: u32,
}

#[derive(Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    tier: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 16)]
    channels: usize,
}

#[derive(Args, Serialize)]
struct CvArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    tier: String,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 16)]
    channels: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct BaselineArgs {
    /// One or more label prevalences in [0, 1].
    #[arg(long, required = true, num_args = 1..)]
    prevalence: Vec<f64>,
    #[arg(long, default_value_t = 5000)]
    n_frames: usize,
    #[arg(long, default_value_t = 200)]
    n_trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct GenerateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    recording: String,
    #[arg(long)]
    existence: PathBuf,
    #[arg(long)]
    category: PathBuf,
    #[arg(long)]
    semantics: PathBuf,
    #[arg(long)]
    phase: PathBuf,
    #[arg(long)]
    flow: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    existence_threshold: f64,
    #[arg(long, default_value_t = 0.5)]
    property_threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Record of one artifact-producing run, written next to the main output.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    config_hash: String,
    seed: u64,
    inputs: Vec<String>,
    outputs: Vec<String>,
    tool_version: String,
    wall_clock_s: f64,
}

fn config_hash<T: Serialize>(args: &T) -> String {
    let json = serde_json::to_string(args).expect("args serialize");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

/// Entry point, separated from `main` so tests can drive the CLI in-process.
/// Exit codes: 0 success, 1 data errors, 2 usage errors.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders help/version as "errors" that should exit 0
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<i32> {
    match command {
        Command::Validate { corpus } => cmd_validate(&corpus),
        Command::Synth(args) => cmd_synth(args),
        Command::Features { corpus, out } => cmd_features(&corpus, &out),
        Command::Train(args) => cmd_train(args),
        Command::Cv(args) => cmd_cv(args),
        Command::Baseline(args) => cmd_baseline(args),
        Command::Report { summary, baseline, out } => cmd_report(&summary, &baseline, out),
        Command::Generate(args) => cmd_generate(args),
    }
}

fn cmd_validate(corpus: &Path) -> anyhow::Result<i32> {
    let load = load_corpus(corpus)?;
    println!("loaded {} recordings", load.recordings.len());
    for issue in &load.issues {
        println!("issue {}: {}", issue.recording_id, issue.message);
    }
    if !load.recordings.is_empty() {
        let grids: Vec<_> = load.recordings.iter().map(|r| rasterize(r, FPS)).collect();
        for (label, p) in prevalence(&grids, PrevalenceScope::AllFrames)? {
            println!("prevalence {label}: {p:.4}");
        }
    }
    Ok(if load.issues.is_empty() { 0 } else { 1 })
}

fn cmd_synth(args: SynthArgs) -> anyhow::Result<i32> {
    let start = Instant::now();
    let spec = SyntheticSpec {
        prevalences: SyntheticSpec::reference_prevalences(),
        n_recordings: args.recordings,
        duration_s: args.duration_s,
        seed: args.seed,
        sample_rate_hz: args.sample_rate_hz,
    };
    let recordings = make_synthetic_corpus(&spec)?;
    save_corpus(&args.out, &recordings, FPS)?;
    println!("wrote {} recordings to {}", recordings.len(), args.out.display());
    write_manifest(
        &args.out.join("run_manifest.json"),
        &RunManifest {
            command: "synth".into(),
            config_hash: config_hash(&args),
            seed: args.seed,
            inputs: vec![],
            outputs: vec![args.out.display().to_string()],
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_clock_s: start.elapsed().as_secs_f64(),
        },
    )?;
    Ok(0)
}

fn audio_config_hash(config: &AudioFeatureConfig) -> String {
    let json = serde_json::to_string(config).expect("config serialize");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn features_for(recording: &AnnotatedRecording) -> anyhow::Result<(FrameFeatures, String)> {
    let config = AudioFeatureConfig::new(recording.sample_rate_hz);
    let provider = HashingEmbedder::default();
    let features = extract_features(recording, &config, &provider, FPS)
        .with_context(|| format!("extracting features for {}", recording.recording_id))?;
    Ok((features, audio_config_hash(&config)))
}

fn cmd_features(corpus: &Path, out: &Path) -> anyhow::Result<i32> {
    let start = Instant::now();
    let load = load_corpus(corpus)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut outputs = Vec::new();
    for rec in &load.recordings {
        let (features, hash) = features_for(rec)?;
        let path = out.join(format!("{}.feat", rec.recording_id));
        save_feature_cache(&path, &features, &hash)?;
        outputs.push(path.display().to_string());
    }
    println!("cached features for {} recordings", load.recordings.len());
    write_manifest(
        &out.join("run_manifest.json"),
        &RunManifest {
            command: "features".into(),
            config_hash: config_hash(&(corpus.display().to_string(), out.display().to_string())),
            seed: 0,
            inputs: vec![corpus.display().to_string()],
            outputs,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_clock_s: start.elapsed().as_secs_f64(),
        },
    )?;
    Ok(if load.issues.is_empty() { 0 } else { 1 })
}

fn parse_tier(name: &str) -> anyhow::Result<Tier> {
    Tier::parse(name).map_err(|e| anyhow::anyhow!("{e} (expected one of: existence, category, semantics, phase)"))
}

fn cv_inputs(corpus: &Path) -> anyhow::Result<Vec<CvInput>> {
    let load = load_corpus(corpus)?;
    if load.recordings.is_empty() {
        bail!("corpus at {} has no loadable recordings", corpus.display());
    }
    load.recordings
        .iter()
        .map(|rec| {
            let (features, _) = features_for(rec)?;
            Ok(CvInput {
                recording_id: rec.recording_id.clone(),
                speaker_id: rec.speaker_id.clone(),
                grid: rasterize(rec, FPS),
                features,
            })
        })
        .collect()
}

fn cmd_train(args: TrainArgs) -> anyhow::Result<i32> {
    let start = Instant::now();
    let tier = parse_tier(&args.tier)?;
    let inputs = cv_inputs(&args.corpus)?;

    let schema = GesturePropertySchema;
    let labels: Vec<String> = schema.labels(tier).iter().map(|s| s.to_string()).collect();
    let window = WindowSpec::default();
    let filter =
        if tier == Tier::Existence { FrameFilter::All } else { FrameFilter::GestureOnly };
    let mut examples = Vec::new();
    for input in &inputs {
        examples.extend(build_examples(
            &input.recording_id,
            &input.speaker_id,
            &input.grid,
            &input.features,
            &window,
            tier,
            filter,
        )?);
    }

    let spec = DilatedConvSpec { channels: args.channels, ..DilatedConvSpec::default() };
    let config = TrainConfig { epochs: args.epochs, seed: args.seed, ..TrainConfig::default() };
    let (params, logs) = train(&examples, tier, &labels, &spec, &config)?;
    for log in &logs {
        println!(
            "epoch {} train_loss {:.4} val_macro_f1 {:.4}",
            log.epoch, log.train_loss, log.val_macro_f1
        );
    }
    save_params(&args.out, &params)?;
    println!("saved checkpoint {} (spec {})", args.out.display(), params.spec_hash());
    write_manifest(
        &manifest_path(&args.out),
        &RunManifest {
            command: "train".into(),
            config_hash: config_hash(&args),
            seed: args.seed,
            inputs: vec![args.corpus.display().to_string()],
            outputs: vec![args.out.display().to_string()],
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_clock_s: start.elapsed().as_secs_f64(),
        },
    )?;
    Ok(0)
}

fn cmd_cv(args: CvArgs) -> anyhow::Result<i32> {
    let start = Instant::now();
    let tier = parse_tier(&args.tier)?;
    let inputs = cv_inputs(&args.corpus)?;
    let speakers: Vec<String> = inputs.iter().map(|i| i.speaker_id.clone()).collect();
    let plan = plan_folds(&speakers, args.k, args.seed)?;

    let window = WindowSpec::default();
    let spec = DilatedConvSpec { channels: args.channels, ..DilatedConvSpec::default() };
    let config = TrainConfig { epochs: args.epochs, seed: args.seed, ..TrainConfig::default() };
    let (folds, summary) = cross_validate(&inputs, tier, &plan, &window, &spec, &config)?;

    for label in &summary.labels {
        println!(
            "{}: f1 {:.3} +- {:.3}, macro_f1 {:.3} +- {:.3} over {} folds",
            label.name, label.f1_mean, label.f1_std, label.macro_f1_mean, label.macro_f1_std,
            label.n_defined_folds
        );
    }
    if let Some(out) = &args.out {
        let doc = serde_json::json!({ "folds": folds, "summary": summary });
        fs::write(out, serde_json::to_string_pretty(&doc)?)
            .with_context(|| format!("writing {}", out.display()))?;
        write_manifest(
            &manifest_path(out),
            &RunManifest {
                command: "cv".into(),
                config_hash: config_hash(&args),
                seed: args.seed,
                inputs: vec![args.corpus.display().to_string()],
                outputs: vec![out.display().to_string()],
                tool_version: env!("CARGO_PKG_VERSION").into(),
                wall_clock_s: start.elapsed().as_secs_f64(),
            },
        )?;
    }
    Ok(0)
}

fn cmd_baseline(args: BaselineArgs) -> anyhow::Result<i32> {
    let start = Instant::now();
    let result = random_guess_baseline(
        &args.prevalence,
        args.n_frames,
        args.n_trials,
        args.seed,
        &BaselineMode::Independent,
    )?;
    for label in &result.labels {
        println!(
            "prevalence {:.3}: f1 {:.3} +- {:.3}, macro_f1 {:.3} +- {:.3}",
            label.prevalence, label.f1_mean, label.f1_std, label.macro_f1_mean,
            label.macro_f1_std
        );
    }
    if let Some(out) = &args.out {
        fs::write(out, serde_json::to_string_pretty(&result)?)
            .with_context(|| format!("writing {}", out.display()))?;
        write_manifest(
            &manifest_path(out),
            &RunManifest {
                command: "baseline".into(),
                config_hash: config_hash(&args),
                seed: args.seed,
                inputs: vec![],
                outputs: vec![out.display().to_string()],
                tool_version: env!("CARGO_PKG_VERSION").into(),
                wall_clock_s: start.elapsed().as_secs_f64(),
            },
        )?;
    }
    Ok(0)
}

fn cmd_report(summary: &Path, baseline: &Path, out: Option<PathBuf>) -> anyhow::Result<i32> {
    let start = Instant::now();
    let text = fs::read_to_string(summary)
        .with_context(|| format!("reading {}", summary.display()))?;
    // accept either a bare summary or the {folds, summary} document cv writes
    let summary_doc: TierSummary = match serde_json::from_str(&text) {
        Ok(s) => s,
        Err(_) => {
            let doc: serde_json::Value = serde_json::from_str(&text)?;
            serde_json::from_value(
                doc.get("summary").cloned().context("no summary field in cv output")?,
            )?
        }
    };
    let baseline_doc: BaselineResult = serde_json::from_str(
        &fs::read_to_string(baseline)
            .with_context(|| format!("reading {}", baseline.display()))?,
    )?;
    if summary_doc.labels.len() != baseline_doc.labels.len() {
        bail!(
            "summary has {} labels but baseline has {}",
            summary_doc.labels.len(),
            baseline_doc.labels.len()
        );
    }
    let report = render_report(&summary_doc, &baseline_doc);
    print!("{}", report.to_text());
    if let Some(out) = &out {
        fs::write(out, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("writing {}", out.display()))?;
        write_manifest(
            &manifest_path(out),
            &RunManifest {
                command: "report".into(),
                config_hash: config_hash(&(
                    summary.display().to_string(),
                    baseline.display().to_string(),
                )),
                seed: 0,
                inputs: vec![
                    summary.display().to_string(),
                    baseline.display().to_string(),
                ],
                outputs: vec![out.display().to_string()],
                tool_version: env!("CARGO_PKG_VERSION").into(),
                wall_clock_s: start.elapsed().as_secs_f64(),
            },
        )?;
    }
    Ok(0)
}

fn cmd_generate(args: GenerateArgs) -> anyhow::Result<i32> {
    let start = Instant::now();
    let load = load_corpus(&args.corpus)?;
    let recording = load
        .recordings
        .iter()
        .find(|r| r.recording_id == args.recording)
        .with_context(|| format!("recording {} not in corpus", args.recording))?;

    let models = PipelineModels {
        existence: load_params(&args.existence, None)?,
        category: load_params(&args.category, None)?,
        semantics: load_params(&args.semantics, None)?,
        phase: load_params(&args.phase, None)?,
        flow: load_flow(&args.flow, None)?,
    };
    let config = PipelineConfig {
        existence_threshold: args.existence_threshold,
        property_threshold: args.property_threshold,
        window: WindowSpec::default(),
        fps: FPS,
        seed: args.seed,
    };
    let (features, _) = features_for(recording)?;
    let records = run_on_features(&features, &models, &config)?;

    let mut lines = String::new();
    for record in &records {
        lines.push_str(&serde_json::to_string(record)?);
        lines.push('\n');
    }
    fs::write(&args.out, lines).with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "wrote {} frames, gesture frequency {:.3}",
        records.len(),
        gesture_frequency(&records)?
    );
    write_manifest(
        &manifest_path(&args.out),
        &RunManifest {
            command: "generate".into(),
            config_hash: config_hash(&args),
            seed: args.seed,
            inputs: vec![
                args.corpus.display().to_string(),
                args.existence.display().to_string(),
                args.category.display().to_string(),
                args.semantics.display().to_string(),
                args.phase.display().to_string(),
                args.flow.display().to_string(),
            ],
            outputs: vec![args.out.display().to_string()],
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_clock_s: start.elapsed().as_secs_f64(),
        },
    )?;
    Ok(0)
}
