//! Converters from public benchmark annotation formats into the grounding
//! record schema. Annotation files stay where the user put them; only the
//! converted records are written.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_jsonl;
use crate::record::{round2, GroundingRecord};
use crate::span::TimeSpan;

/// Annotation formats the converter understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ConvertFormat {
    /// `charades_sta_{train,test}.txt` plus the `Charades_v1_*.csv` metadata
    /// table supplying per-video durations.
    CharadesSta,
    /// Dense-captions JSON: `{vid: {duration, timestamps, sentences}}`.
    Activitynet,
}

/// Resolved plan for `groundkit convert`.
#[derive(Debug, Clone, Serialize)]
pub struct ConvertPlan {
    pub format: ConvertFormat,
    pub annotations: PathBuf,
    /// Required for Charades-STA; unused otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub durations: Option<PathBuf>,
    pub out: PathBuf,
    pub report: Option<PathBuf>,
}

/// Counters describing one conversion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvertSummary {
    pub annotations_in: usize,
    pub records_out: usize,
    /// Annotations whose span vanished after clamping to the video duration.
    pub skipped_empty: usize,
}

/// Report emitted by `groundkit convert`.
#[derive(Debug, Clone, Serialize)]
pub struct ConvertReport {
    pub command: String,
    pub config: serde_json::Value,
    pub summary: ConvertSummary,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        action: "read annotations",
        path: path.display().to_string(),
        source,
    })
}

/// Runs the conversion described by `plan`.
pub fn run_convert(plan: &ConvertPlan) -> Result<ConvertReport> {
    let (records, summary) = match plan.format {
        ConvertFormat::CharadesSta => {
            let durations_path = plan.durations.as_deref().ok_or_else(|| {
                Error::InvalidArgument(
                    "charades-sta conversion requires --durations <Charades_v1_*.csv>".into(),
                )
            })?;
            let durations = read_charades_durations(durations_path)?;
            convert_charades_sta(&read_text(&plan.annotations)?, &durations)?
        }
        ConvertFormat::Activitynet => convert_activitynet(&read_text(&plan.annotations)?)?,
    };
    write_jsonl(&plan.out, &records)?;
    let report = ConvertReport {
        command: "convert".to_string(),
        config: serde_json::to_value(plan).expect("plan serializes"),
        summary,
    };
    if let Some(path) = &plan.report {
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|source| Error::Io {
            action: "write report",
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(report)
}

/// Reads the per-video `length` column of a Charades metadata CSV.
pub fn read_charades_durations(path: &Path) -> Result<HashMap<String, f64>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| {
        Error::InvalidArgument(format!("cannot read durations csv {}: {e}", path.display()))
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::InvalidArgument(format!("durations csv has no header row: {e}")))?;
    let col = |name: &'static str| {
        headers.iter().position(|h| h == name).ok_or(Error::MissingField {
            field: name,
            context: format!("durations csv {}", path.display()),
        })
    };
    let (id_col, len_col) = (col("id")?, col("length")?);
    let mut durations = HashMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| {
            Error::InvalidArgument(format!("durations csv row {} is malformed: {e}", i + 2))
        })?;
        let id = row.get(id_col).unwrap_or_default().to_string();
        let len_text = row.get(len_col).unwrap_or_default();
        let length: f64 = len_text.parse().map_err(|_| Error::InvalidRecord {
            id: id.clone(),
            reason: format!("unparseable video length {len_text:?}"),
        })?;
        durations.insert(id, length);
    }
    Ok(durations)
}

/// Clamps an annotated span into `[0, duration]`, swapping reversed ends;
/// `None` when nothing of it survives.
fn clamp_span(start: f64, end: f64, duration: f64) -> Option<TimeSpan> {
    let (lo, hi) = if start <= end { (start, end) } else { (end, start) };
    let lo = round2(lo.clamp(0.0, duration));
    let hi = round2(hi.clamp(0.0, duration));
    if hi > lo {
        Some(TimeSpan::new(lo, hi).expect("clamped span is ordered and finite"))
    } else {
        None
    }
}

/// Parses `charades_sta` annotation text (`VID START END##query` lines).
///
/// Record ids are `{vid}#{k}` with `k` counting that video's annotation
/// lines in file order, so an id always denotes the same source line even
/// when clamping skips some.
pub fn convert_charades_sta(
    annotations: &str,
    durations: &HashMap<String, f64>,
) -> Result<(Vec<GroundingRecord>, ConvertSummary)> {
    let mut records = Vec::new();
    let mut per_vid: HashMap<String, usize> = HashMap::new();
    let mut annotations_in = 0;
    let mut skipped_empty = 0;
    for (line_no, raw) in annotations.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        annotations_in += 1;
        let (head, query) = line.split_once("##").ok_or_else(|| {
            Error::InvalidArgument(format!(
                "annotation line {} lacks the '##' separator: {line:?}",
                line_no + 1
            ))
        })?;
        let fields: Vec<&str> = head.split_whitespace().collect();
        let [vid, start_text, end_text] = fields.as_slice() else {
            return Err(Error::InvalidArgument(format!(
                "annotation line {} must read 'VID START END##query': {line:?}",
                line_no + 1
            )));
        };
        let parse = |text: &str| -> Result<f64> {
            text.parse().map_err(|_| {
                Error::InvalidArgument(format!(
                    "annotation line {} has a non-numeric timestamp {text:?}",
                    line_no + 1
                ))
            })
        };
        let (start, end) = (parse(start_text)?, parse(end_text)?);
        let duration = *durations.get(*vid).ok_or_else(|| Error::InvalidRecord {
            id: (*vid).to_string(),
            reason: "video missing from the durations csv".into(),
        })?;
        if !(duration > 0.0) {
            return Err(Error::InvalidRecord {
                id: (*vid).to_string(),
                reason: format!("non-positive video length {duration}"),
            });
        }
        let index = per_vid.entry((*vid).to_string()).or_insert(0);
        let id = format!("{vid}#{index}");
        *index += 1;
        match clamp_span(start, end, duration) {
            Some(gt_span) => records.push(GroundingRecord {
                id,
                video_duration_s: round2(duration),
                query: query.trim().to_string(),
                gt_span,
                pos_span: None,
                neg_span: None,
            }),
            None => skipped_empty += 1,
        }
    }
    let summary = ConvertSummary {
        annotations_in,
        records_out: records.len(),
        skipped_empty,
    };
    Ok((records, summary))
}

#[derive(Debug, Deserialize)]
struct DenseCaptionEntry {
    duration: f64,
    timestamps: Vec<(f64, f64)>,
    sentences: Vec<String>,
}

/// Parses a dense-captions JSON file (`{vid: {duration, timestamps,
/// sentences}}`), emitting `{vid}#{k}` records in sorted video order.
pub fn convert_activitynet(json: &str) -> Result<(Vec<GroundingRecord>, ConvertSummary)> {
    let videos: BTreeMap<String, DenseCaptionEntry> = serde_json::from_str(json)
        .map_err(|e| Error::InvalidArgument(format!("annotations are not valid JSON: {e}")))?;
    let mut records = Vec::new();
    let mut annotations_in = 0;
    let mut skipped_empty = 0;
    for (vid, entry) in &videos {
        if entry.timestamps.len() != entry.sentences.len() {
            return Err(Error::InvalidRecord {
                id: vid.clone(),
                reason: format!(
                    "{} timestamps but {} sentences",
                    entry.timestamps.len(),
                    entry.sentences.len()
                ),
            });
        }
        if !(entry.duration > 0.0) {
            return Err(Error::InvalidRecord {
                id: vid.clone(),
                reason: format!("non-positive duration {}", entry.duration),
            });
        }
        for (k, ((start, end), sentence)) in
            entry.timestamps.iter().zip(&entry.sentences).enumerate()
        {
            annotations_in += 1;
            match clamp_span(*start, *end, entry.duration) {
                Some(gt_span) => records.push(GroundingRecord {
                    id: format!("{vid}#{k}"),
                    video_duration_s: round2(entry.duration),
                    query: sentence.trim().to_string(),
                    gt_span,
                    pos_span: None,
                    neg_span: None,
                }),
                None => skipped_empty += 1,
            }
        }
    }
    let summary = ConvertSummary {
        annotations_in,
        records_out: records.len(),
        skipped_empty,
    };
    Ok((records, summary))
}
