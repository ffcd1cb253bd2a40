//! Dataset mining over precomputed per-scene embeddings: similarity-based
//! scene merging, caption filtering, and negative-span mining.
//!
//! Upstream models own pixels: shot detection, captioning, and embedding
//! computation all happen before this module. The miner consumes one scene
//! inventory per video and produces grounding records whose `pos`/`neg` spans
//! define the legal crop region for training-sample generation.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{round2, GroundingRecord};
use crate::span::TimeSpan;

/// One scene of one video, as produced by upstream shot detection plus
/// embedding/captioning models.
///
/// JSONL wire format:
///
/// ```json
/// {"video_id":"v1","scene_id":"s3","span":[8.0,12.5],"embedding":[0.1,0.9],"caption":"a dog runs","caption_similarity":0.31}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub video_id: String,
    pub scene_id: String,
    pub span: TimeSpan,
    pub embedding: Vec<f32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption_similarity: Option<f64>,
}

/// A mined positive with its surrounding context interval.
#[derive(Debug, Clone, PartialEq)]
pub struct MinedSegment {
    pub segment_id: String,
    pub pos_span: TimeSpan,
    pub caption: String,
    pub neg_span: TimeSpan,
}

impl MinedSegment {
    /// Views a grounding record as a crop source; requires `pos`/`neg` spans.
    pub fn from_record(record: &GroundingRecord) -> Result<Self> {
        let (pos_span, neg_span) = record.crop_bounds()?;
        Ok(MinedSegment {
            segment_id: record.id.clone(),
            pos_span,
            caption: record.query.clone(),
            neg_span,
        })
    }
}

/// Cosine similarity between two embedding vectors (accumulated in f64).
pub fn cosine_similarity(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(u.len(), v.len()));
    }
    if u.is_empty() {
        return Err(Error::EmptyInput("embedding"));
    }
    let mut dot = 0.0f64;
    let mut nu = 0.0f64;
    let mut nv = 0.0f64;
    for (a, b) in u.iter().zip(v) {
        let (a, b) = (*a as f64, *b as f64);
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(dot / (nu.sqrt() * nv.sqrt()))
}

fn check_scene_list(scenes: &[SceneRecord]) -> Result<()> {
    if scenes.is_empty() {
        return Err(Error::EmptyInput("scene list"));
    }
    for pair in scenes.windows(2) {
        if pair[0].video_id != pair[1].video_id {
            return Err(Error::InvalidArgument(format!(
                "scene list mixes videos {} and {}",
                pair[0].video_id, pair[1].video_id
            )));
        }
        if pair[1].span.start_s < pair[0].span.end_s {
            return Err(Error::InvalidArgument(format!(
                "scenes {} and {} overlap or are out of order",
                pair[0].scene_id, pair[1].scene_id
            )));
        }
    }
    Ok(())
}

/// Merges chains of adjacent scenes whose pairwise similarity exceeds
/// `theta_merge` (strictly).
///
/// Similarities are computed between *original* adjacent pairs once, then
/// chained transitively — a deterministic single pass, rather than iterative
/// re-comparison of merged hulls. A merged scene takes the hull span, the
/// duration-weighted mean embedding (re-normalized), and the caption (with its
/// similarity) of its longest member.
pub fn merge_scenes(scenes: &[SceneRecord], theta_merge: f64) -> Result<Vec<SceneRecord>> {
    check_scene_list(scenes)?;
    let mut groups: Vec<Vec<&SceneRecord>> = vec![vec![&scenes[0]]];
    for pair in scenes.windows(2) {
        let sim = cosine_similarity(&pair[0].embedding, &pair[1].embedding)?;
        if sim > theta_merge {
            groups.last_mut().expect("nonempty").push(&pair[1]);
        } else {
            groups.push(vec![&pair[1]]);
        }
    }
    groups.into_iter().map(merge_group).collect()
}

fn merge_group(members: Vec<&SceneRecord>) -> Result<SceneRecord> {
    if members.len() == 1 {
        return Ok(members[0].clone());
    }
    let first = members.first().expect("nonempty group");
    let last = members.last().expect("nonempty group");
    let span = TimeSpan::new(first.span.start_s, last.span.end_s)?;

    let dim = first.embedding.len();
    let total_weight: f64 = members.iter().map(|m| m.span.len()).sum();
    let mut mean = vec![0.0f64; dim];
    for m in members.iter() {
        if m.embedding.len() != dim {
            return Err(Error::DimensionMismatch(dim, m.embedding.len()));
        }
        // Zero-length members get equal weight if nothing has duration.
        let w = if total_weight > 0.0 {
            m.span.len() / total_weight
        } else {
            1.0 / members.len() as f64
        };
        for (acc, x) in mean.iter_mut().zip(&m.embedding) {
            *acc += w * *x as f64;
        }
    }
    let norm = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let embedding = mean.iter().map(|x| (x / norm) as f32).collect();

    let longest = members
        .iter()
        .max_by(|a, b| {
            a.span
                .len()
                .partial_cmp(&b.span.len())
                .expect("finite spans")
        })
        .expect("nonempty group");
    let scene_id = members
        .iter()
        .map(|m| m.scene_id.as_str())
        .collect::<Vec<_>>()
        .join("+");
    Ok(SceneRecord {
        video_id: first.video_id.clone(),
        scene_id,
        span,
        embedding,
        caption: longest.caption.clone(),
        caption_similarity: longest.caption_similarity,
    })
}

/// Outcome of the median-split caption filter.
#[derive(Debug, Clone)]
pub struct CaptionFilter {
    pub kept: Vec<SceneRecord>,
    /// The induced threshold: the ⌈n/2⌉-th largest caption similarity.
    pub threshold: f64,
}

/// Keeps the top half of segments by caption similarity: everything at or
/// above the ⌈n/2⌉-th largest value survives, so ties at the threshold are
/// kept and at least ⌈n/2⌉ segments remain.
pub fn filter_captions(segments: &[SceneRecord]) -> Result<CaptionFilter> {
    if segments.is_empty() {
        return Err(Error::EmptyInput("caption filter input"));
    }
    let mut sims = Vec::with_capacity(segments.len());
    for seg in segments {
        let sim = seg.caption_similarity.ok_or_else(|| Error::MissingField {
            field: "caption_similarity",
            context: format!("scene {}", seg.scene_id),
        })?;
        if !sim.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "caption_similarity of scene {} is not finite",
                seg.scene_id
            )));
        }
        sims.push(sim);
    }
    sims.sort_by(|a, b| b.partial_cmp(a).expect("finite similarities"));
    let threshold = sims[segments.len().div_ceil(2) - 1];
    let kept = segments
        .iter()
        .filter(|s| s.caption_similarity.expect("checked above") >= threshold)
        .cloned()
        .collect();
    Ok(CaptionFilter { kept, threshold })
}

/// Finds the context interval around one positive segment: every other
/// segment with similarity strictly above `theta_sim` blocks extension, and
/// the negative span runs from the end of the last blocker before the
/// positive (or 0) to the start of the first blocker after it (or the end of
/// the video's last segment).
pub fn mine_negative_span(
    segments: &[SceneRecord],
    positive_index: usize,
    theta_sim: f64,
) -> Result<MinedSegment> {
    check_scene_list(segments)?;
    let positive = segments.get(positive_index).ok_or(Error::IndexOutOfRange {
        index: positive_index,
        len: segments.len(),
    })?;
    let caption = positive.caption.clone().ok_or_else(|| Error::MissingField {
        field: "caption",
        context: format!("scene {}", positive.scene_id),
    })?;

    let mut neg_start = 0.0;
    for other in &segments[..positive_index] {
        if cosine_similarity(&positive.embedding, &other.embedding)? > theta_sim {
            neg_start = other.span.end_s;
        }
    }
    let video_end = segments.last().expect("nonempty").span.end_s;
    let mut neg_end = video_end;
    for other in &segments[positive_index + 1..] {
        if cosine_similarity(&positive.embedding, &other.embedding)? > theta_sim {
            neg_end = other.span.start_s;
            break;
        }
    }
    Ok(MinedSegment {
        segment_id: positive.scene_id.clone(),
        pos_span: positive.span,
        caption,
        neg_span: TimeSpan::new(neg_start, neg_end)?,
    })
}

/// Per-stage counts for a mining run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MineSummary {
    pub videos: usize,
    pub scenes_in: usize,
    pub segments_after_merge: usize,
    pub captioned_segments: usize,
    pub kept_after_filter: usize,
    pub records_out: usize,
    pub induced_caption_threshold: Option<f64>,
    pub theta_merge: f64,
    pub theta_sim: f64,
}

/// The full pipeline: group scenes by video, merge, filter captions
/// corpus-wide, and mine a negative span for every kept positive.
///
/// All merged segments — captioned or not, kept or filtered out — still act
/// as blockers during negative-span mining; the filter only decides which
/// positives become records. Record ids are `"{video_id}/{merged_scene_id}"`,
/// durations the end of the video's last scene, and times are rounded to the
/// 2-decimal wire precision.
pub fn mine_corpus(
    scenes: &[SceneRecord],
    theta_merge: f64,
    theta_sim: f64,
) -> Result<(Vec<GroundingRecord>, MineSummary)> {
    if scenes.is_empty() {
        return Err(Error::EmptyInput("scene corpus"));
    }
    let mut by_video: BTreeMap<&str, Vec<SceneRecord>> = BTreeMap::new();
    for scene in scenes {
        by_video
            .entry(scene.video_id.as_str())
            .or_default()
            .push(scene.clone());
    }

    let mut merged_by_video: BTreeMap<&str, Vec<SceneRecord>> = BTreeMap::new();
    let mut captioned = Vec::new();
    for (video_id, scenes) in &by_video {
        let merged = merge_scenes(scenes, theta_merge)?;
        captioned.extend(
            merged
                .iter()
                .filter(|s| s.caption_similarity.is_some())
                .cloned(),
        );
        merged_by_video.insert(video_id, merged);
    }

    let (kept_ids, threshold, captioned_count) = if captioned.is_empty() {
        (HashSet::new(), None, 0)
    } else {
        let filter = filter_captions(&captioned)?;
        let ids: HashSet<(String, String)> = filter
            .kept
            .iter()
            .map(|s| (s.video_id.clone(), s.scene_id.clone()))
            .collect();
        (ids, Some(filter.threshold), captioned.len())
    };

    let mut records = Vec::new();
    for (video_id, merged) in &merged_by_video {
        let duration = round2(merged.last().expect("nonempty video").span.end_s);
        for (idx, segment) in merged.iter().enumerate() {
            if !kept_ids.contains(&(segment.video_id.clone(), segment.scene_id.clone())) {
                continue;
            }
            let mined = mine_negative_span(merged, idx, theta_sim)?;
            let pos = TimeSpan::new(round2(mined.pos_span.start_s), round2(mined.pos_span.end_s))?;
            let neg = TimeSpan::new(round2(mined.neg_span.start_s), round2(mined.neg_span.end_s))?;
            records.push(GroundingRecord {
                id: format!("{video_id}/{}", mined.segment_id),
                video_duration_s: duration,
                query: mined.caption,
                gt_span: pos,
                pos_span: Some(pos),
                neg_span: Some(neg),
            });
        }
    }

    let summary = MineSummary {
        videos: by_video.len(),
        scenes_in: scenes.len(),
        segments_after_merge: merged_by_video.values().map(Vec::len).sum(),
        captioned_segments: captioned_count,
        kept_after_filter: kept_ids.len(),
        records_out: records.len(),
        induced_caption_threshold: threshold,
        theta_merge,
        theta_sim,
    };
    Ok((records, summary))
}
