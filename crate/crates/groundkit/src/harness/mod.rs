//! Batch runner behind the CLI: resolves run plans, fans records out over a
//! worker pool with per-record derived seeds, and writes id-ordered
//! prediction files, JSON reports, and sweep tables.
//!
//! Determinism contract: every stochastic step derives its seed from the
//! global seed and the record id, never from worker identity or scheduling,
//! so output files are byte-identical across worker counts. Wall-clock
//! timings are the one intentionally non-deterministic field; `no_timing`
//! zeroes them for byte-stable output.

pub mod convert;

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::frames::frame_plan;
use crate::engine::{random_baseline, recursive_ground, upperbound, GroundingError};
use crate::error::{Error, Result};
use crate::io::{read_jsonl, read_records, write_jsonl};
use crate::metrics::{aggregate_metrics_with, MetricsMode, MetricsReport, RecallRule};
use crate::miner::{mine_corpus, MineSummary, MinedSegment, SceneRecord};
use crate::oracle::{
    ChoiceOracle, NoisyOracle, RemoteOracle, RemoteOracleConfig, ScriptedOracle, TruthfulOracle,
};
use crate::record::GroundingRecord;
use crate::sampler::prompts::{render_captioning_prompt, render_grounding_prompt, PromptBank};
use crate::sampler::{sample_crop, CropMode};
use crate::seed::{record_seed, subseed};
use crate::span::{CoarseCategory, TimeSpan};

/// Oracle families selectable from the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    /// Answers with the true category of the ground-truth span.
    Truthful,
    /// Truthful with probability `1 - epsilon`, otherwise a uniform wrong pick.
    Noisy,
    /// Replays choices stored in a previous run's prediction file.
    Scripted,
    /// Queries an HTTP endpoint with rendered prompts.
    Remote,
}

/// One prediction-file line; the byte-determinism contract applies to these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionLine {
    pub id: String,
    /// Final window, or `null` when the oracle failed.
    pub pred: Option<TimeSpan>,
    pub rounds_used: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub wall_ms: f64,
}

/// One recursion round as stored in prediction files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub window: TimeSpan,
    pub choice: CoarseCategory,
}

/// Per-example report row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExampleRow {
    pub id: String,
    pub pred: Option<TimeSpan>,
    pub iou: f64,
    pub rounds_used: usize,
    pub wall_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// One sweep-table row (also the CSV schema).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub miou: f64,
    pub recall_03: f64,
    pub recall_05: f64,
    pub recall_07: f64,
    pub avg_wall_ms: f64,
    pub n_failed: usize,
}

/// The JSON report emitted by metric-producing commands.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    /// Echo of the resolved plan the run executed.
    pub config: serde_json::Value,
    pub metrics: MetricsReport,
    pub avg_wall_ms: f64,
    pub rows: Vec<ExampleRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepRow>>,
}

impl RunReport {
    /// Fraction of rows whose oracle failed.
    pub fn failure_rate(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        let failed = self.rows.iter().filter(|r| r.failure.is_some()).count();
        failed as f64 / self.rows.len() as f64
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::Io {
        action: "write report",
        path: path.display().to_string(),
        source,
    })
}

fn read_sorted_records(path: &Path) -> Result<Vec<GroundingRecord>> {
    let mut records = read_records(path)?;
    if records.is_empty() {
        return Err(Error::EmptyInput("records file"));
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(records)
}

fn elapsed_ms(started: Instant, no_timing: bool) -> f64 {
    if no_timing {
        0.0
    } else {
        started.elapsed().as_secs_f64() * 1e3
    }
}

fn rows_from_lines(lines: &[PredictionLine], gts: &[TimeSpan]) -> Result<Vec<ExampleRow>> {
    lines
        .iter()
        .zip(gts)
        .map(|(line, gt)| {
            let iou = match line.pred {
                Some(pred) if pred.is_empty() => 0.0,
                Some(pred) => crate::span::iou(&pred, gt)?,
                None => 0.0,
            };
            Ok(ExampleRow {
                id: line.id.clone(),
                pred: line.pred,
                iou,
                rounds_used: line.rounds_used,
                wall_ms: line.wall_ms,
                failure: line.failure.clone(),
            })
        })
        .collect()
}

fn finish_report(
    command: &str,
    config: serde_json::Value,
    lines: Vec<PredictionLine>,
    gts: Vec<TimeSpan>,
    mode: MetricsMode,
    rule: RecallRule,
    out: Option<&Path>,
    report_path: Option<&Path>,
) -> Result<RunReport> {
    if let Some(path) = out {
        write_jsonl(path, &lines)?;
    }
    let outcomes: Vec<(Option<TimeSpan>, TimeSpan)> =
        lines.iter().zip(&gts).map(|(l, gt)| (l.pred, *gt)).collect();
    let metrics = aggregate_metrics_with(&outcomes, mode, rule)?;
    let rows = rows_from_lines(&lines, &gts)?;
    let avg_wall_ms = rows.iter().map(|r| r.wall_ms).sum::<f64>() / rows.len() as f64;
    let report = RunReport {
        command: command.to_string(),
        config,
        metrics,
        avg_wall_ms,
        rows,
        sweep: None,
    };
    if let Some(path) = report_path {
        write_json(path, &report)?;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// ground

/// Resolved plan for `groundkit ground`.
#[derive(Debug, Clone, Serialize)]
pub struct GroundPlan {
    pub records: PathBuf,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub oracle: OracleKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub remote: Option<RemoteOracleConfig>,
    pub max_rounds: usize,
    pub num_frames: usize,
    pub seed: u64,
    pub workers: usize,
    pub metrics_mode: MetricsMode,
    pub recall_rule: RecallRule,
    pub no_timing: bool,
}

enum OracleSpec {
    Truthful,
    Noisy { epsilon: f64 },
    Scripted { traces: HashMap<String, Vec<CoarseCategory>> },
    Remote(RemoteOracle),
}

impl OracleSpec {
    fn build(plan: &GroundPlan) -> Result<Self> {
        match plan.oracle {
            OracleKind::Truthful => Ok(OracleSpec::Truthful),
            OracleKind::Noisy => {
                let epsilon = plan.epsilon.ok_or_else(|| {
                    Error::InvalidArgument("noisy oracle requires --epsilon".into())
                })?;
                if !(0.0..=1.0).contains(&epsilon) {
                    return Err(Error::InvalidArgument(format!(
                        "epsilon must lie in [0, 1], got {epsilon}"
                    )));
                }
                Ok(OracleSpec::Noisy { epsilon })
            }
            OracleKind::Scripted => {
                let path = plan.trace_file.as_deref().ok_or_else(|| {
                    Error::InvalidArgument("scripted oracle requires --trace-file".into())
                })?;
                Ok(OracleSpec::Scripted { traces: load_traces(path)? })
            }
            OracleKind::Remote => {
                let config = plan.remote.clone().ok_or_else(|| {
                    Error::InvalidArgument(
                        "remote oracle requires an endpoint (flag, config, or env)".into(),
                    )
                })?;
                Ok(OracleSpec::Remote(RemoteOracle::new(config)?))
            }
        }
    }

    /// Constructs a fresh oracle for one record, so no oracle state is ever
    /// shared across workers.
    fn make(&self, record: &GroundingRecord, global_seed: u64) -> Result<Box<dyn ChoiceOracle>> {
        Ok(match self {
            OracleSpec::Truthful => Box::new(TruthfulOracle::new(record.gt_span)),
            OracleSpec::Noisy { epsilon } => Box::new(NoisyOracle::new(
                record.gt_span,
                *epsilon,
                subseed(global_seed, &record.id, "noise"),
            )?),
            OracleSpec::Scripted { traces } => {
                let choices = traces.get(&record.id).ok_or_else(|| Error::InvalidRecord {
                    id: record.id.clone(),
                    reason: "no stored trace for this record".into(),
                })?;
                Box::new(ScriptedOracle::new(choices.clone()))
            }
            OracleSpec::Remote(oracle) => Box::new(oracle.clone()),
        })
    }
}

/// Reads the per-record choice scripts out of a stored prediction file.
pub fn load_traces(path: &Path) -> Result<HashMap<String, Vec<CoarseCategory>>> {
    let lines: Vec<PredictionLine> = read_jsonl(path)?;
    let mut traces = HashMap::with_capacity(lines.len());
    for line in lines {
        let trace = line.trace.ok_or_else(|| Error::InvalidRecord {
            id: line.id.clone(),
            reason: "prediction line carries no trace to replay".into(),
        })?;
        let choices = trace.into_iter().map(|e| e.choice).collect();
        if traces.insert(line.id.clone(), choices).is_some() {
            return Err(Error::InvalidRecord {
                id: line.id,
                reason: "duplicate id in trace file".into(),
            });
        }
    }
    Ok(traces)
}

fn ground_one(
    record: &GroundingRecord,
    spec: &OracleSpec,
    plan: &GroundPlan,
) -> Result<PredictionLine> {
    let started = Instant::now();
    let mut oracle = spec.make(record, plan.seed)?;
    let rng_seed = record_seed(plan.seed, &record.id);
    let line = match recursive_ground(
        oracle.as_mut(),
        record,
        plan.max_rounds,
        plan.num_frames,
        rng_seed,
    ) {
        Ok((span, trace)) => PredictionLine {
            id: record.id.clone(),
            pred: Some(span),
            rounds_used: trace.rounds.len(),
            trace: Some(trace_entries(&trace.rounds)),
            failure: None,
            wall_ms: 0.0,
        },
        Err(GroundingError::Oracle { failure, partial }) => PredictionLine {
            id: record.id.clone(),
            pred: None,
            rounds_used: partial.rounds.len(),
            trace: Some(trace_entries(&partial.rounds)),
            failure: Some(failure.kind().to_string()),
            wall_ms: 0.0,
        },
        Err(GroundingError::Invalid(e)) => return Err(e),
    };
    Ok(PredictionLine {
        wall_ms: elapsed_ms(started, plan.no_timing),
        ..line
    })
}

fn trace_entries(rounds: &[crate::engine::TraceRound]) -> Vec<TraceEntry> {
    rounds
        .iter()
        .map(|r| TraceEntry { window: r.window, choice: r.choice })
        .collect()
}

/// Grounds every record in the plan's input file.
pub fn run_ground(plan: &GroundPlan) -> Result<RunReport> {
    let records = read_sorted_records(&plan.records)?;
    let spec = OracleSpec::build(plan)?;
    let lines: Vec<PredictionLine> = pool(plan.workers)?.install(|| {
        records
            .par_iter()
            .map(|rec| ground_one(rec, &spec, plan))
            .collect::<Result<_>>()
    })?;
    let gts = records.iter().map(|r| r.gt_span).collect();
    finish_report(
        "ground",
        serde_json::to_value(plan).expect("plan serializes"),
        lines,
        gts,
        plan.metrics_mode,
        plan.recall_rule,
        plan.out.as_deref(),
        plan.report.as_deref(),
    )
}

// ---------------------------------------------------------------------------
// upperbound

/// Resolved plan for `groundkit upperbound`.
#[derive(Debug, Clone, Serialize)]
pub struct UpperboundPlan {
    pub records: PathBuf,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub max_rounds: usize,
    pub workers: usize,
    pub metrics_mode: MetricsMode,
    pub recall_rule: RecallRule,
    pub no_timing: bool,
}

/// Scores the best window any choice sequence could reach, per record.
pub fn run_upperbound(plan: &UpperboundPlan) -> Result<RunReport> {
    let records = read_sorted_records(&plan.records)?;
    let lines: Vec<PredictionLine> = pool(plan.workers)?.install(|| {
        records
            .par_iter()
            .map(|rec| {
                let started = Instant::now();
                let (span, _best) = upperbound(rec, plan.max_rounds)?;
                Ok(PredictionLine {
                    id: rec.id.clone(),
                    pred: Some(span),
                    rounds_used: plan.max_rounds,
                    trace: None,
                    failure: None,
                    wall_ms: elapsed_ms(started, plan.no_timing),
                })
            })
            .collect::<Result<_>>()
    })?;
    let gts = records.iter().map(|r| r.gt_span).collect();
    finish_report(
        "upperbound",
        serde_json::to_value(plan).expect("plan serializes"),
        lines,
        gts,
        plan.metrics_mode,
        plan.recall_rule,
        plan.out.as_deref(),
        plan.report.as_deref(),
    )
}

// ---------------------------------------------------------------------------
// baseline

/// Resolved plan for `groundkit baseline`.
#[derive(Debug, Clone, Serialize)]
pub struct BaselinePlan {
    pub records: PathBuf,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    /// Fixed predicted-span length in seconds.
    pub span_len: f64,
    pub seed: u64,
    pub workers: usize,
    pub metrics_mode: MetricsMode,
    pub recall_rule: RecallRule,
    pub no_timing: bool,
}

/// Mean ground-truth span length of a records file, for `--span-len-from`.
pub fn mean_gt_length(path: &Path) -> Result<f64> {
    let records = read_sorted_records(path)?;
    Ok(records.iter().map(|r| r.gt_span.len()).sum::<f64>() / records.len() as f64)
}

/// Predicts a fixed-length window at a uniformly random position.
pub fn run_baseline(plan: &BaselinePlan) -> Result<RunReport> {
    if !(plan.span_len > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "span length must be positive, got {}",
            plan.span_len
        )));
    }
    let records = read_sorted_records(&plan.records)?;
    let lines: Vec<PredictionLine> = pool(plan.workers)?.install(|| {
        records
            .par_iter()
            .map(|rec| {
                let started = Instant::now();
                let span = random_baseline(rec, plan.span_len, record_seed(plan.seed, &rec.id))?;
                Ok(PredictionLine {
                    id: rec.id.clone(),
                    pred: Some(span),
                    rounds_used: 0,
                    trace: None,
                    failure: None,
                    wall_ms: elapsed_ms(started, plan.no_timing),
                })
            })
            .collect::<Result<_>>()
    })?;
    let gts = records.iter().map(|r| r.gt_span).collect();
    finish_report(
        "baseline",
        serde_json::to_value(plan).expect("plan serializes"),
        lines,
        gts,
        plan.metrics_mode,
        plan.recall_rule,
        plan.out.as_deref(),
        plan.report.as_deref(),
    )
}

// ---------------------------------------------------------------------------
// eval

/// Resolved plan for `groundkit eval`.
#[derive(Debug, Clone, Serialize)]
pub struct EvalPlan {
    pub records: PathBuf,
    pub predictions: PathBuf,
    pub report: Option<PathBuf>,
    pub metrics_mode: MetricsMode,
    pub recall_rule: RecallRule,
}

/// Rescores a stored prediction file against its records.
///
/// Records without a prediction line count as failures (kind `missing`);
/// prediction lines whose id matches no record abort the run.
pub fn run_eval(plan: &EvalPlan) -> Result<RunReport> {
    let records = read_sorted_records(&plan.records)?;
    let predictions: Vec<PredictionLine> = read_jsonl(&plan.predictions)?;
    let known: HashSet<&str> = records.iter().map(|r| r.id.as_str()).collect();
    let mut by_id: HashMap<String, PredictionLine> = HashMap::with_capacity(predictions.len());
    for line in predictions {
        if !known.contains(line.id.as_str()) {
            return Err(Error::InvalidRecord {
                id: line.id,
                reason: "prediction id not present in the records file".into(),
            });
        }
        if let Some(dup) = by_id.insert(line.id.clone(), line) {
            return Err(Error::InvalidRecord {
                id: dup.id,
                reason: "duplicate id in prediction file".into(),
            });
        }
    }
    let lines: Vec<PredictionLine> = records
        .iter()
        .map(|rec| {
            by_id.remove(&rec.id).unwrap_or(PredictionLine {
                id: rec.id.clone(),
                pred: None,
                rounds_used: 0,
                trace: None,
                failure: Some("missing".to_string()),
                wall_ms: 0.0,
            })
        })
        .collect();
    let gts = records.iter().map(|r| r.gt_span).collect();
    finish_report(
        "eval",
        serde_json::to_value(plan).expect("plan serializes"),
        lines,
        gts,
        plan.metrics_mode,
        plan.recall_rule,
        None,
        plan.report.as_deref(),
    )
}

// ---------------------------------------------------------------------------
// sweep

/// Axes `groundkit sweep` can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    MaxRounds,
    NumFrames,
    Epsilon,
}

/// Resolved plan for `groundkit sweep`.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPlan {
    pub base: GroundPlan,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub csv_out: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

fn integral(axis: &str, value: f64) -> Result<usize> {
    if value.fract() != 0.0 || value < 0.0 || value > u32::MAX as f64 {
        return Err(Error::InvalidArgument(format!(
            "{axis} values must be non-negative integers, got {value}"
        )));
    }
    Ok(value as usize)
}

/// Runs one grounding pass per axis value with shared seeds and assembles a
/// plottable table. The returned report's metrics and rows come from the
/// last axis value.
pub fn run_sweep(plan: &SweepPlan) -> Result<RunReport> {
    if plan.values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    if plan.axis == SweepAxis::Epsilon && plan.base.oracle != OracleKind::Noisy {
        return Err(Error::InvalidArgument(
            "an epsilon sweep requires the noisy oracle".into(),
        ));
    }
    let mut sweep_rows = Vec::with_capacity(plan.values.len());
    let mut last: Option<RunReport> = None;
    for &value in &plan.values {
        let mut run = plan.base.clone();
        run.out = None;
        run.report = None;
        match plan.axis {
            SweepAxis::MaxRounds => run.max_rounds = integral("max-rounds", value)?,
            SweepAxis::NumFrames => {
                run.num_frames = integral("num-frames", value)?;
                if run.num_frames == 0 {
                    return Err(Error::InvalidArgument(
                        "num-frames values must be at least 1".into(),
                    ));
                }
            }
            SweepAxis::Epsilon => run.epsilon = Some(value),
        }
        let report = run_ground(&run)?;
        sweep_rows.push(SweepRow {
            value,
            miou: report.metrics.miou,
            recall_03: report.metrics.recall(0.3).unwrap_or(0.0),
            recall_05: report.metrics.recall(0.5).unwrap_or(0.0),
            recall_07: report.metrics.recall(0.7).unwrap_or(0.0),
            avg_wall_ms: report.avg_wall_ms,
            n_failed: report.metrics.n_failed,
        });
        last = Some(report);
    }
    if let Some(path) = &plan.csv_out {
        write_sweep_csv(path, &sweep_rows)?;
    }
    let last = last.expect("at least one sweep value ran");
    let report = RunReport {
        command: "sweep".to_string(),
        config: serde_json::to_value(plan).expect("plan serializes"),
        metrics: last.metrics,
        avg_wall_ms: last.avg_wall_ms,
        rows: last.rows,
        sweep: Some(sweep_rows),
    };
    if let Some(path) = &plan.report {
        write_json(path, &report)?;
    }
    Ok(report)
}

fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let io_err = |source: std::io::Error| Error::Io {
        action: "write sweep csv",
        path: path.display().to_string(),
        source,
    };
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(source),
        other => Error::InvalidArgument(format!("cannot open sweep csv: {other:?}")),
    })?;
    writer
        .write_record([
            "value",
            "miou",
            "recall_0.3",
            "recall_0.5",
            "recall_0.7",
            "avg_wall_ms",
            "n_failed",
        ])
        .and_then(|()| {
            rows.iter().try_for_each(|r| {
                writer.write_record([
                    r.value.to_string(),
                    r.miou.to_string(),
                    r.recall_03.to_string(),
                    r.recall_05.to_string(),
                    r.recall_07.to_string(),
                    r.avg_wall_ms.to_string(),
                    r.n_failed.to_string(),
                ])
            })
        })
        .map_err(|e| Error::InvalidArgument(format!("cannot write sweep csv: {e}")))?;
    writer.flush().map_err(io_err)
}

// ---------------------------------------------------------------------------
// mine

/// Resolved plan for `groundkit mine`.
#[derive(Debug, Clone, Serialize)]
pub struct MinePlan {
    pub scenes: PathBuf,
    pub records_out: PathBuf,
    pub report: Option<PathBuf>,
    pub theta_merge: f64,
    pub theta_sim: f64,
}

/// Report emitted by `groundkit mine`.
#[derive(Debug, Clone, Serialize)]
pub struct MineReport {
    pub command: String,
    pub config: serde_json::Value,
    pub summary: MineSummary,
}

/// Mines grounding records from a scene-inventory file.
pub fn run_mine(plan: &MinePlan) -> Result<MineReport> {
    let scenes: Vec<SceneRecord> = read_jsonl(&plan.scenes)?;
    let (records, summary) = mine_corpus(&scenes, plan.theta_merge, plan.theta_sim)?;
    write_jsonl(&plan.records_out, &records)?;
    let report = MineReport {
        command: "mine".to_string(),
        config: serde_json::to_value(plan).expect("plan serializes"),
        summary,
    };
    if let Some(path) = &plan.report {
        write_json(path, &report)?;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// sample

/// Resolved plan for `groundkit sample`.
#[derive(Debug, Clone, Serialize)]
pub struct SamplePlan {
    pub records: PathBuf,
    pub out: PathBuf,
    pub report: Option<PathBuf>,
    pub samples_per_record: usize,
    pub crop_mode: CropMode,
    pub num_frames: usize,
    pub seed: u64,
    pub workers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompt_bank: Option<PathBuf>,
}

/// One emitted training sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleLine {
    pub segment_id: String,
    pub window: TimeSpan,
    pub task: String,
    pub prompt: String,
    pub answer: String,
    pub loss_span: (usize, usize),
    pub option_order: [CoarseCategory; 4],
    pub seed: u64,
}

/// Report emitted by `groundkit sample`.
#[derive(Debug, Clone, Serialize)]
pub struct SampleReport {
    pub command: String,
    pub config: serde_json::Value,
    pub n_records: usize,
    pub n_lines: usize,
    /// Grounding-answer counts, for eyeballing category balance.
    pub answer_histogram: std::collections::BTreeMap<CoarseCategory, usize>,
}

fn sample_record(
    record: &GroundingRecord,
    bank: &PromptBank,
    plan: &SamplePlan,
) -> Result<Vec<SampleLine>> {
    let segment = MinedSegment::from_record(record)?;
    let mut lines = Vec::with_capacity(plan.samples_per_record * 2);
    for i in 0..plan.samples_per_record {
        for task in ["grounding", "captioning"] {
            let crop_seed = subseed(plan.seed, &record.id, &format!("{task}-crop-{i}"));
            let render_seed = subseed(plan.seed, &record.id, &format!("{task}-render-{i}"));
            let sample = sample_crop(&segment, crop_seed, plan.crop_mode)?;
            let frames = frame_plan(&sample.window, plan.num_frames)?;
            let rendered = match task {
                "grounding" => {
                    render_grounding_prompt(bank, &segment, &sample, &frames, render_seed)?
                }
                _ => render_captioning_prompt(bank, &segment, &sample, &frames, render_seed)?,
            };
            lines.push(SampleLine {
                segment_id: record.id.clone(),
                window: sample.window,
                task: task.to_string(),
                prompt: rendered.prompt,
                answer: rendered.answer,
                loss_span: rendered.loss_span,
                option_order: sample.option_order,
                seed: crop_seed,
            });
        }
    }
    Ok(lines)
}

/// Crops and renders training samples for every record.
pub fn run_sample(plan: &SamplePlan) -> Result<SampleReport> {
    if plan.samples_per_record == 0 {
        return Err(Error::InvalidArgument("samples-per-record must be at least 1".into()));
    }
    let records = read_sorted_records(&plan.records)?;
    let owned_bank;
    let bank: &PromptBank = match &plan.prompt_bank {
        Some(path) => {
            owned_bank = PromptBank::load(path)?;
            &owned_bank
        }
        None => PromptBank::builtin()?,
    };
    let per_record: Vec<Vec<SampleLine>> = pool(plan.workers)?.install(|| {
        records
            .par_iter()
            .map(|rec| sample_record(rec, bank, plan))
            .collect::<Result<_>>()
    })?;
    let lines: Vec<SampleLine> = per_record.into_iter().flatten().collect();
    write_jsonl(&plan.out, &lines)?;

    let mut answer_histogram = std::collections::BTreeMap::new();
    for line in lines.iter().filter(|l| l.task == "grounding") {
        let position = line
            .answer
            .chars()
            .nth(1)
            .and_then(|c| (c as u8).checked_sub(b'A'))
            .filter(|i| *i < 4)
            .ok_or_else(|| Error::MalformedAnswer(line.answer.clone()))?;
        *answer_histogram
            .entry(line.option_order[position as usize])
            .or_insert(0) += 1;
    }
    let report = SampleReport {
        command: "sample".to_string(),
        config: serde_json::to_value(plan).expect("plan serializes"),
        n_records: records.len(),
        n_lines: lines.len(),
        answer_histogram,
    };
    if let Some(path) = &plan.report {
        write_json(path, &report)?;
    }
    Ok(report)
}
