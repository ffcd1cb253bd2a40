//! `groundkit` — command-line front end for the grounding toolkit.
//!
//! Every long flag can also be supplied by a TOML config file (kebab-case
//! keys) passed with `--config`; explicit flags win over the file, which wins
//! over built-in defaults. Exit codes: 0 success, 2 configuration error,
//! 3 input/output or data error, 4 oracle failure rate above 50%.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use groundkit::harness::convert::{run_convert, ConvertFormat, ConvertPlan, ConvertReport};
use groundkit::harness::{
    mean_gt_length, run_baseline, run_eval, run_ground, run_mine, run_sample, run_sweep,
    run_upperbound, BaselinePlan, EvalPlan, GroundPlan, MinePlan, MineReport, OracleKind,
    RunReport, SamplePlan, SampleReport, SweepAxis, SweepPlan, UpperboundPlan,
};
use groundkit::metrics::{MetricsMode, RecallRule};
use groundkit::oracle::RemoteOracleConfig;
use groundkit::sampler::CropMode;
use groundkit::{Error, Result};

/// Fallback source for the remote oracle endpoint.
const REMOTE_ENDPOINT_ENV: &str = "GROUNDKIT_REMOTE_ENDPOINT";

#[derive(Parser)]
#[command(
    name = "groundkit",
    version,
    about = "Coarse-grained temporal video grounding toolkit"
)]
struct Cli {
    /// TOML file supplying defaults for any long flag (kebab-case keys).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine grounding records from a per-scene embedding inventory.
    Mine(MineArgs),
    /// Crop and render training samples from mined records.
    Sample(SampleArgs),
    /// Ground records by recursive narrowing over a choice oracle.
    Ground(GroundArgs),
    /// Score the best window any choice sequence could reach.
    Upperbound(UpperboundArgs),
    /// Predict fixed-length windows at random positions.
    Baseline(BaselineArgs),
    /// Rescore a stored prediction file against its records.
    Eval(EvalArgs),
    /// Run grounding across a range of one knob and tabulate metrics.
    Sweep(SweepArgs),
    /// Convert public benchmark annotations into records JSONL.
    Convert(ConvertArgs),
}

/// Optional values a `--config` TOML file may define.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    records: Option<PathBuf>,
    out: Option<PathBuf>,
    report: Option<PathBuf>,
    oracle: Option<OracleKind>,
    epsilon: Option<f64>,
    trace_file: Option<PathBuf>,
    endpoint: Option<String>,
    timeout_ms: Option<u64>,
    retries: Option<u32>,
    template_id: Option<usize>,
    max_rounds: Option<usize>,
    num_frames: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    metrics_mode: Option<MetricsMode>,
    recall_rule: Option<RecallRule>,
    no_timing: Option<bool>,
    theta_merge: Option<f64>,
    theta_sim: Option<f64>,
    scenes: Option<PathBuf>,
    records_out: Option<PathBuf>,
    samples_per_record: Option<usize>,
    crop_mode: Option<CropMode>,
    prompt_bank: Option<PathBuf>,
    span_len: Option<f64>,
    span_len_from: Option<PathBuf>,
    predictions: Option<PathBuf>,
    axis: Option<SweepAxis>,
    values: Option<Vec<f64>>,
    csv_out: Option<PathBuf>,
    format: Option<ConvertFormat>,
    annotations: Option<PathBuf>,
    durations: Option<PathBuf>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::InvalidArgument(format!("cannot read config {}: {e}", path.display()))
    })?;
    toml::from_str(&text)
        .map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::InvalidArgument(format!("{flag} is required")))
}

#[derive(Args)]
struct GroundArgs {
    /// Records JSONL to ground.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Prediction JSONL to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report to write.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Choice oracle driving the recursion.
    #[arg(long, value_enum)]
    oracle: Option<OracleKind>,
    /// Wrong-answer probability for the noisy oracle.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Stored prediction file the scripted oracle replays.
    #[arg(long)]
    trace_file: Option<PathBuf>,
    /// Remote oracle endpoint (also config `endpoint` or $GROUNDKIT_REMOTE_ENDPOINT).
    #[arg(long)]
    endpoint: Option<String>,
    /// Remote oracle request timeout in milliseconds.
    #[arg(long)]
    timeout_ms: Option<u64>,
    /// Remote oracle retries after malformed answers.
    #[arg(long)]
    retries: Option<u32>,
    /// Prompt template index for the remote oracle.
    #[arg(long)]
    template_id: Option<usize>,
    /// Maximum recursion rounds.
    #[arg(long)]
    max_rounds: Option<usize>,
    /// Frames described per round.
    #[arg(long)]
    num_frames: Option<usize>,
    /// Global seed; per-record seeds derive from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// How failed predictions enter the metrics.
    #[arg(long, value_enum)]
    metrics_mode: Option<MetricsMode>,
    /// Whether R@IoU>t counts ties at the threshold.
    #[arg(long, value_enum)]
    recall_rule: Option<RecallRule>,
    /// Write zeros for wall-clock fields (byte-stable outputs).
    #[arg(long)]
    no_timing: bool,
}

fn resolve_ground(args: &GroundArgs, config: &FileConfig) -> Result<GroundPlan> {
    let oracle = args.oracle.or(config.oracle).unwrap_or(OracleKind::Truthful);
    let endpoint = args
        .endpoint
        .clone()
        .or_else(|| config.endpoint.clone())
        .or_else(|| std::env::var(REMOTE_ENDPOINT_ENV).ok());
    let remote = match (oracle, endpoint) {
        (OracleKind::Remote, Some(endpoint)) => Some(RemoteOracleConfig {
            endpoint,
            timeout_ms: args
                .timeout_ms
                .or(config.timeout_ms)
                .unwrap_or_else(|| RemoteOracleConfig::default().timeout_ms),
            retries: args
                .retries
                .or(config.retries)
                .unwrap_or_else(|| RemoteOracleConfig::default().retries),
            template_id: args
                .template_id
                .or(config.template_id)
                .unwrap_or_else(|| RemoteOracleConfig::default().template_id),
        }),
        _ => None,
    };
    Ok(GroundPlan {
        records: require(args.records.clone().or_else(|| config.records.clone()), "--records")?,
        out: args.out.clone().or_else(|| config.out.clone()),
        report: args.report.clone().or_else(|| config.report.clone()),
        oracle,
        epsilon: args.epsilon.or(config.epsilon),
        trace_file: args.trace_file.clone().or_else(|| config.trace_file.clone()),
        remote,
        max_rounds: args.max_rounds.or(config.max_rounds).unwrap_or(3),
        num_frames: args.num_frames.or(config.num_frames).unwrap_or(12),
        seed: args.seed.or(config.seed).unwrap_or(0),
        workers: args.workers.or(config.workers).unwrap_or(0),
        metrics_mode: args.metrics_mode.or(config.metrics_mode).unwrap_or_default(),
        recall_rule: args.recall_rule.or(config.recall_rule).unwrap_or_default(),
        no_timing: args.no_timing || config.no_timing.unwrap_or(false),
    })
}

#[derive(Args)]
struct UpperboundArgs {
    /// Records JSONL to score.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Prediction JSONL to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report to write.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Maximum recursion rounds.
    #[arg(long)]
    max_rounds: Option<usize>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    metrics_mode: Option<MetricsMode>,
    #[arg(long, value_enum)]
    recall_rule: Option<RecallRule>,
    /// Write zeros for wall-clock fields (byte-stable outputs).
    #[arg(long)]
    no_timing: bool,
}

fn resolve_upperbound(args: &UpperboundArgs, config: &FileConfig) -> Result<UpperboundPlan> {
    Ok(UpperboundPlan {
        records: require(args.records.clone().or_else(|| config.records.clone()), "--records")?,
        out: args.out.clone().or_else(|| config.out.clone()),
        report: args.report.clone().or_else(|| config.report.clone()),
        max_rounds: args.max_rounds.or(config.max_rounds).unwrap_or(3),
        workers: args.workers.or(config.workers).unwrap_or(0),
        metrics_mode: args.metrics_mode.or(config.metrics_mode).unwrap_or_default(),
        recall_rule: args.recall_rule.or(config.recall_rule).unwrap_or_default(),
        no_timing: args.no_timing || config.no_timing.unwrap_or(false),
    })
}

#[derive(Args)]
struct BaselineArgs {
    /// Records JSONL to score.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Prediction JSONL to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report to write.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Fixed predicted-span length in seconds.
    #[arg(long)]
    span_len: Option<f64>,
    /// Records file whose mean ground-truth length becomes the span length.
    #[arg(long)]
    span_len_from: Option<PathBuf>,
    /// Global seed; per-record seeds derive from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    metrics_mode: Option<MetricsMode>,
    #[arg(long, value_enum)]
    recall_rule: Option<RecallRule>,
    /// Write zeros for wall-clock fields (byte-stable outputs).
    #[arg(long)]
    no_timing: bool,
}

fn resolve_baseline(args: &BaselineArgs, config: &FileConfig) -> Result<BaselinePlan> {
    // Whichever source explicitly sets a span-length option wins as a pair,
    // so a CLI choice is never mixed with a conflicting config choice.
    let (len, from) = if args.span_len.is_some() || args.span_len_from.is_some() {
        (args.span_len, args.span_len_from.clone())
    } else {
        (config.span_len, config.span_len_from.clone())
    };
    let span_len = match (len, from) {
        (Some(v), None) => v,
        (None, Some(path)) => mean_gt_length(&path)?,
        (Some(_), Some(_)) => {
            return Err(Error::InvalidArgument(
                "--span-len and --span-len-from are mutually exclusive".into(),
            ))
        }
        (None, None) => {
            return Err(Error::InvalidArgument(
                "baseline requires --span-len or --span-len-from".into(),
            ))
        }
    };
    Ok(BaselinePlan {
        records: require(args.records.clone().or_else(|| config.records.clone()), "--records")?,
        out: args.out.clone().or_else(|| config.out.clone()),
        report: args.report.clone().or_else(|| config.report.clone()),
        span_len,
        seed: args.seed.or(config.seed).unwrap_or(0),
        workers: args.workers.or(config.workers).unwrap_or(0),
        metrics_mode: args.metrics_mode.or(config.metrics_mode).unwrap_or_default(),
        recall_rule: args.recall_rule.or(config.recall_rule).unwrap_or_default(),
        no_timing: args.no_timing || config.no_timing.unwrap_or(false),
    })
}

#[derive(Args)]
struct EvalArgs {
    /// Records JSONL the predictions refer to.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Prediction JSONL to rescore.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// JSON report to write.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum)]
    metrics_mode: Option<MetricsMode>,
    #[arg(long, value_enum)]
    recall_rule: Option<RecallRule>,
}

fn resolve_eval(args: &EvalArgs, config: &FileConfig) -> Result<EvalPlan> {
    Ok(EvalPlan {
        records: require(args.records.clone().or_else(|| config.records.clone()), "--records")?,
        predictions: require(
            args.predictions.clone().or_else(|| config.predictions.clone()),
            "--predictions",
        )?,
        report: args.report.clone().or_else(|| config.report.clone()),
        metrics_mode: args.metrics_mode.or(config.metrics_mode).unwrap_or_default(),
        recall_rule: args.recall_rule.or(config.recall_rule).unwrap_or_default(),
    })
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    ground: GroundArgs,
    /// Knob to vary.
    #[arg(long, value_enum)]
    axis: Option<SweepAxis>,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    /// Sweep table CSV to write.
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

fn resolve_sweep(args: &SweepArgs, config: &FileConfig) -> Result<SweepPlan> {
    if args.ground.out.is_some() {
        return Err(Error::InvalidArgument(
            "sweep writes no prediction file; drop --out".into(),
        ));
    }
    let mut base = resolve_ground(&args.ground, config)?;
    let report = base.report.take();
    base.out = None;
    Ok(SweepPlan {
        base,
        axis: require(args.axis.or(config.axis), "--axis")?,
        values: require(args.values.clone().or_else(|| config.values.clone()), "--values")?,
        csv_out: args.csv_out.clone().or_else(|| config.csv_out.clone()),
        report,
    })
}

#[derive(Args)]
struct MineArgs {
    /// Scene inventory JSONL.
    #[arg(long)]
    scenes: Option<PathBuf>,
    /// Records JSONL to write.
    #[arg(long)]
    records_out: Option<PathBuf>,
    /// JSON report to write.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Adjacent-scene merge threshold (cosine similarity, exclusive).
    #[arg(long)]
    theta_merge: Option<f64>,
    /// Similar-segment threshold for negative-span mining (exclusive).
    #[arg(long)]
    theta_sim: Option<f64>,
}

fn resolve_mine(args: &MineArgs, config: &FileConfig) -> Result<MinePlan> {
    Ok(MinePlan {
        scenes: require(args.scenes.clone().or_else(|| config.scenes.clone()), "--scenes")?,
        records_out: require(
            args.records_out.clone().or_else(|| config.records_out.clone()),
            "--records-out",
        )?,
        report: args.report.clone().or_else(|| config.report.clone()),
        theta_merge: require(args.theta_merge.or(config.theta_merge), "--theta-merge")?,
        theta_sim: require(args.theta_sim.or(config.theta_sim), "--theta-sim")?,
    })
}

#[derive(Args)]
struct SampleArgs {
    /// Records JSONL with pos/neg spans.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Samples JSONL to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report to write.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Grounding + captioning sample pairs per record.
    #[arg(long)]
    samples_per_record: Option<usize>,
    /// Window sampling strategy.
    #[arg(long, value_enum)]
    crop_mode: Option<CropMode>,
    /// Frames described per sample.
    #[arg(long)]
    num_frames: Option<usize>,
    /// Global seed; per-record seeds derive from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// External template bank JSON (must match the pinned checksum).
    #[arg(long)]
    prompt_bank: Option<PathBuf>,
}

fn resolve_sample(args: &SampleArgs, config: &FileConfig) -> Result<SamplePlan> {
    Ok(SamplePlan {
        records: require(args.records.clone().or_else(|| config.records.clone()), "--records")?,
        out: require(args.out.clone().or_else(|| config.out.clone()), "--out")?,
        report: args.report.clone().or_else(|| config.report.clone()),
        samples_per_record: args
            .samples_per_record
            .or(config.samples_per_record)
            .unwrap_or(1),
        crop_mode: args.crop_mode.or(config.crop_mode).unwrap_or_default(),
        num_frames: args.num_frames.or(config.num_frames).unwrap_or(12),
        seed: args.seed.or(config.seed).unwrap_or(0),
        workers: args.workers.or(config.workers).unwrap_or(0),
        prompt_bank: args.prompt_bank.clone().or_else(|| config.prompt_bank.clone()),
    })
}

#[derive(Args)]
struct ConvertArgs {
    /// Source annotation format.
    #[arg(long, value_enum)]
    format: Option<ConvertFormat>,
    /// Annotation file (txt for charades-sta, JSON for activitynet).
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Charades metadata CSV supplying per-video durations.
    #[arg(long)]
    durations: Option<PathBuf>,
    /// Records JSONL to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report to write.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn resolve_convert(args: &ConvertArgs, config: &FileConfig) -> Result<ConvertPlan> {
    Ok(ConvertPlan {
        format: require(args.format.or(config.format), "--format")?,
        annotations: require(
            args.annotations.clone().or_else(|| config.annotations.clone()),
            "--annotations",
        )?,
        durations: args.durations.clone().or_else(|| config.durations.clone()),
        out: require(args.out.clone().or_else(|| config.out.clone()), "--out")?,
        report: args.report.clone().or_else(|| config.report.clone()),
    })
}

fn print_metrics_summary(report: &RunReport) {
    let m = &report.metrics;
    let recalls: Vec<String> = m
        .recall_at
        .iter()
        .map(|(k, v)| format!("R@{k} {:.2}%", v * 100.0))
        .collect();
    println!(
        "{}: mIoU {:.2}% | {} | examples {} ({} failed) | avg {:.3} ms",
        report.command,
        m.miou * 100.0,
        recalls.join(" "),
        m.n_examples,
        m.n_failed,
        report.avg_wall_ms,
    );
    if let Some(table) = &report.sweep {
        for row in table {
            println!(
                "  value {} -> mIoU {:.2}% R@0.3 {:.2}% R@0.5 {:.2}% R@0.7 {:.2}% ({} failed)",
                row.value,
                row.miou * 100.0,
                row.recall_03 * 100.0,
                row.recall_05 * 100.0,
                row.recall_07 * 100.0,
                row.n_failed,
            );
        }
    }
}

fn print_mine_summary(report: &MineReport) {
    let s = &report.summary;
    println!(
        "mine: {} scenes in {} videos -> {} merged segments, {} captioned, {} kept, {} records (caption threshold {})",
        s.scenes_in,
        s.videos,
        s.segments_after_merge,
        s.captioned_segments,
        s.kept_after_filter,
        s.records_out,
        s.induced_caption_threshold
            .map_or_else(|| "n/a".to_string(), |t| format!("{t}")),
    );
}

fn print_sample_summary(report: &SampleReport) {
    let histogram: Vec<String> = report
        .answer_histogram
        .iter()
        .map(|(cat, n)| format!("{cat} {n}"))
        .collect();
    println!(
        "sample: {} lines from {} records | answers: {}",
        report.n_lines,
        report.n_records,
        histogram.join(", "),
    );
}

fn print_convert_summary(report: &ConvertReport) {
    let s = &report.summary;
    println!(
        "convert: {} annotations -> {} records ({} skipped after clamping)",
        s.annotations_in, s.records_out, s.skipped_empty,
    );
}

fn failure_exit(report: &RunReport) -> ExitCode {
    let rate = report.failure_rate();
    if rate > 0.5 {
        eprintln!(
            "warning: oracle failure rate {:.1}% exceeds 50%",
            rate * 100.0
        );
        ExitCode::from(4)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let config = load_file_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Mine(args) => {
            let report = run_mine(&resolve_mine(args, &config)?)?;
            print_mine_summary(&report);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample(args) => {
            let report = run_sample(&resolve_sample(args, &config)?)?;
            print_sample_summary(&report);
            Ok(ExitCode::SUCCESS)
        }
        Command::Ground(args) => {
            let report = run_ground(&resolve_ground(args, &config)?)?;
            print_metrics_summary(&report);
            Ok(failure_exit(&report))
        }
        Command::Upperbound(args) => {
            let report = run_upperbound(&resolve_upperbound(args, &config)?)?;
            print_metrics_summary(&report);
            Ok(ExitCode::SUCCESS)
        }
        Command::Baseline(args) => {
            let report = run_baseline(&resolve_baseline(args, &config)?)?;
            print_metrics_summary(&report);
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval(args) => {
            let report = run_eval(&resolve_eval(args, &config)?)?;
            print_metrics_summary(&report);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(args) => {
            let report = run_sweep(&resolve_sweep(args, &config)?)?;
            print_metrics_summary(&report);
            Ok(failure_exit(&report))
        }
        Command::Convert(args) => {
            let report = run_convert(&resolve_convert(args, &config)?)?;
            print_convert_summary(&report);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) | Error::TemplateMismatch(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
