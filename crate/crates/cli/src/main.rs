//! `hicurate`: lip stabilization, quality curation, curriculum scheduling and
//! evaluation for audio-visual speech corpora.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use hicurate_core::curation::{curate_corpus, write_curation_outputs, CorpusStats, CurationConfig, SnrMode};
use hicurate_core::curriculum::{build_schedule, ScheduleOptions};
use hicurate_core::lip_geometry::{apply_crops, plan_crops, LipIndexSet};
use hicurate_core::manifest::{read_landmark_track, read_pairs_manifest, read_sample_manifest, sha256_hex, SampleRecord};
use hicurate_core::media::{read_frame_dir, write_numbered_frames};
use hicurate_core::metrics::{evaluate_corpus, load_pairs, DEFAULT_ALPHA};
use hicurate_core::resampler::{run_check, ResamplerConfig};

/// Settings read from `--config`. Command-line flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PipelineConfig {
    lips_path: Option<PathBuf>,
    workers: Option<usize>,
    seed: Option<u64>,
    alpha: Option<f64>,
    epochs_stage1: Option<usize>,
    epochs_stage2: Option<usize>,
    mix_in_accept: Option<bool>,
    curation: CurationConfig,
    resampler: Option<ResamplerConfig>,
}

impl PipelineConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    fn lips(&self, flag: Option<&Path>) -> Result<LipIndexSet> {
        match flag.or(self.lips_path.as_deref()) {
            Some(p) => Ok(LipIndexSet::from_file(p)?),
            None => Ok(LipIndexSet::face_mesh_default()),
        }
    }
}

#[derive(Parser)]
#[command(name = "hicurate", version, about)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Crop every video to a fixed, lip-centered window.
    Stabilize(StabilizeArgs),
    /// Score samples and split them into accept/reject manifests.
    Curate(CurateArgs),
    /// Build the two-stage epoch schedule.
    Schedule(ScheduleArgs),
    /// Compute CER, embedding similarity and the comprehensive score.
    Evaluate(EvaluateArgs),
    /// Check resampler shapes, attention normalization and gradients.
    ResamplerCheck(ResamplerCheckArgs),
}

#[derive(Args)]
struct StabilizeArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// JSON file with the lip landmark indices.
    #[arg(long)]
    lips: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args)]
struct CurateArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    lips: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Normalize with the SNR/motion bounds of an earlier report.
    #[arg(long)]
    frozen_stats: Option<PathBuf>,
    #[arg(long)]
    normalize_text: bool,
    /// `reference` (needs clean_audio) or `estimate`.
    #[arg(long, value_parser = parse_snr_mode)]
    snr_mode: Option<SnrMode>,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long)]
    accept: PathBuf,
    #[arg(long)]
    reject: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs_stage1: Option<usize>,
    #[arg(long)]
    epochs_stage2: Option<usize>,
    /// Replay accepted samples during stage 2.
    #[arg(long)]
    mix_in_accept: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    normalize_text: bool,
}

#[derive(Args)]
struct ResamplerCheckArgs {
    /// Use the small configuration (4 queries, 2 heads).
    #[arg(long)]
    toy: bool,
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_snr_mode(s: &str) -> Result<SnrMode, String> {
    match s {
        "reference" => Ok(SnrMode::Reference),
        "estimate" => Ok(SnrMode::Estimate),
        _ => Err(format!("expected `reference` or `estimate`, got `{s}`")),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn base_dir(manifest: &Path) -> &Path {
    manifest.parent().unwrap_or(Path::new("."))
}

#[derive(Serialize)]
struct StabilizedSample {
    id: String,
    size: u32,
    frames: usize,
}

#[derive(Serialize)]
struct Failure {
    id: String,
    reason: String,
}

#[derive(Serialize)]
struct StabilizeReport {
    gamma: f64,
    samples: Vec<StabilizedSample>,
    failures: Vec<Failure>,
}

fn stabilize_one(record: &SampleRecord, out: &Path, lips: &LipIndexSet, gamma: f64) -> Result<StabilizedSample> {
    let track = read_landmark_track(&record.landmarks)?;
    let frames = read_frame_dir(&record.frames)?;
    let plan = plan_crops(&track, lips, gamma)?;
    let crops = apply_crops(&frames, &plan)?;
    let dir = out.join(&record.id);
    write_numbered_frames(&dir, "crop", &crops)?;
    let plan_path = dir.join("crop_plan.json");
    fs::write(&plan_path, plan.to_json_line() + "\n")
        .with_context(|| format!("writing {}", plan_path.display()))?;
    Ok(StabilizedSample {
        id: record.id.clone(),
        size: plan.size,
        frames: crops.len(),
    })
}

fn stabilize(args: StabilizeArgs, config: &PipelineConfig) -> Result<()> {
    let lips = config.lips(args.lips.as_deref())?;
    let gamma = args.gamma.unwrap_or(config.curation.gamma);
    let base = base_dir(&args.manifest);
    let records = read_sample_manifest(&args.manifest)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let results: Vec<Result<StabilizedSample>> = records
        .par_iter()
        .map(|r| stabilize_one(&r.resolved(base), &args.out, &lips, gamma))
        .collect();
    let mut report = StabilizeReport {
        gamma,
        samples: Vec::new(),
        failures: Vec::new(),
    };
    for (r, res) in records.iter().zip(results) {
        match res {
            Ok(s) => report.samples.push(s),
            Err(e) => report.failures.push(Failure {
                id: r.id.clone(),
                reason: format!("{e:#}"),
            }),
        }
    }
    write_json(&args.out.join("stabilize_report.json"), &report)?;
    eprintln!(
        "stabilized {} sample(s), {} failure(s)",
        report.samples.len(),
        report.failures.len()
    );
    if report.samples.is_empty() {
        bail!("no sample could be stabilized");
    }
    Ok(())
}

fn curate(args: CurateArgs, config: &PipelineConfig) -> Result<()> {
    let lips = config.lips(args.lips.as_deref())?;
    let mut cfg = config.curation.clone();
    if let Some(t) = args.threshold {
        cfg.threshold = t;
    }
    if let Some(m) = args.snr_mode {
        cfg.snr_mode = m;
    }
    if args.frozen_stats.is_some() {
        cfg.frozen_stats_path = args.frozen_stats;
    }
    cfg.normalize_text |= args.normalize_text;
    let frozen = cfg
        .frozen_stats_path
        .as_deref()
        .map(CorpusStats::from_file)
        .transpose()?;

    let records = read_sample_manifest(&args.manifest)?;
    let outcome = curate_corpus(&records, base_dir(&args.manifest), &cfg, &lips, frozen)?;
    write_curation_outputs(&outcome, &args.out)?;
    eprintln!(
        "accepted {}, rejected {}, excluded {}",
        outcome.accept.len(),
        outcome.reject.len(),
        outcome.report.excluded.len()
    );
    Ok(())
}

fn schedule(args: ScheduleArgs, config: &PipelineConfig) -> Result<()> {
    let mut hashes = std::collections::BTreeMap::new();
    let mut ids = Vec::new();
    for (role, path) in [("accept", &args.accept), ("reject", &args.reject)] {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        hashes.insert(role.to_string(), sha256_hex(&bytes));
        let records = read_sample_manifest(path)?;
        ids.push(records.into_iter().map(|r| r.id).collect::<Vec<_>>());
    }
    let defaults = ScheduleOptions::default();
    let options = ScheduleOptions {
        seed: args.seed.or(config.seed).unwrap_or(defaults.seed),
        epochs_stage1: args
            .epochs_stage1
            .or(config.epochs_stage1)
            .unwrap_or(defaults.epochs_stage1),
        epochs_stage2: args
            .epochs_stage2
            .or(config.epochs_stage2)
            .unwrap_or(defaults.epochs_stage2),
        mix_in_accept: args.mix_in_accept || config.mix_in_accept.unwrap_or(false),
    };
    let mut schedule = build_schedule(&ids[0], &ids[1], options)?;
    schedule.manifest_hashes = hashes;
    for w in &schedule.warnings {
        eprintln!("warning: {w}");
    }
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let path = args.out.join("schedule.json");
    fs::write(&path, schedule.to_json()?).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("{} epochs written to {}", schedule.total_epochs(), path.display());
    Ok(())
}

fn evaluate(args: EvaluateArgs, config: &PipelineConfig) -> Result<()> {
    let alpha = args.alpha.or(config.alpha).unwrap_or(DEFAULT_ALPHA);
    let normalize = args.normalize_text || config.curation.normalize_text;
    let records = read_pairs_manifest(&args.pairs)?;
    let (pairs, load_failures) = load_pairs(&records, base_dir(&args.pairs), normalize);
    if pairs.is_empty() {
        let first = load_failures.first().map(|f| format!(": {} ({})", f.id, f.reason));
        bail!("no pair could be loaded{}", first.unwrap_or_default());
    }
    let mut report = evaluate_corpus(&pairs, alpha)?;
    report.failures.extend(load_failures);
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_json(&args.out.join("eval_report.json"), &report)?;
    println!(
        "CER {:.4}  EmbSim {:.4}  CS {:.4}  ({} pairs, {} failures)",
        report.corpus_cer_micro,
        report.corpus_emb_sim,
        report.corpus_cs_micro,
        report.records.len(),
        report.failures.len()
    );
    Ok(())
}

fn resampler_check(args: ResamplerCheckArgs, config: &PipelineConfig) -> Result<bool> {
    let mut cfg = if args.toy {
        ResamplerConfig::toy()
    } else {
        config.resampler.unwrap_or_default()
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let report = run_check(&cfg, args.epsilon)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(report.passed)
}

fn run(cli: Cli) -> Result<bool> {
    let config = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(n) = cli.workers.or(config.workers) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker pool")?;
    }
    match cli.command {
        Command::Stabilize(a) => stabilize(a, &config)?,
        Command::Curate(a) => curate(a, &config)?,
        Command::Schedule(a) => schedule(a, &config)?,
        Command::Evaluate(a) => evaluate(a, &config)?,
        Command::ResamplerCheck(a) => return resampler_check(a, &config),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
