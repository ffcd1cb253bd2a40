//! Evaluation records and the JSONL schema they travel in.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::span::TimeSpan;

/// One grounding example: a video, a text query, and where the answer lies.
///
/// Mined records additionally carry the positive/negative span pair that
/// defines the legal cropping region (`pos` ⊆ crop ⊆ `neg`).
///
/// JSONL wire format (times in seconds, at most 2 decimal places):
///
/// ```json
/// {"id":"v1#0","duration":31.2,"query":"person opens a door","gt":[4.1,9.8],"pos":[4.1,9.8],"neg":[0.0,17.5]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingRecord {
    pub id: String,
    #[serde(rename = "duration")]
    pub video_duration_s: f64,
    pub query: String,
    #[serde(rename = "gt")]
    pub gt_span: TimeSpan,
    #[serde(rename = "pos", default, skip_serializing_if = "Option::is_none")]
    pub pos_span: Option<TimeSpan>,
    #[serde(rename = "neg", default, skip_serializing_if = "Option::is_none")]
    pub neg_span: Option<TimeSpan>,
}

impl GroundingRecord {
    /// The full-video search window `[0, duration]`.
    pub fn full_window(&self) -> Result<TimeSpan> {
        if !(self.video_duration_s.is_finite() && self.video_duration_s > 0.0) {
            return Err(Error::InvalidRecord {
                id: self.id.clone(),
                reason: format!("duration must be positive, got {}", self.video_duration_s),
            });
        }
        TimeSpan::new(0.0, self.video_duration_s)
    }

    /// Checks every schema invariant; call once on ingest.
    pub fn validate(&self) -> Result<()> {
        let full = self.full_window()?;
        let fail = |reason: String| Error::InvalidRecord {
            id: self.id.clone(),
            reason,
        };
        if self.id.is_empty() {
            return Err(fail("empty id".into()));
        }
        if self.gt_span.is_empty() {
            return Err(fail(format!("gt span {} has zero length", self.gt_span)));
        }
        if !full.contains(&self.gt_span) {
            return Err(fail(format!(
                "gt span {} exceeds [0, {}]",
                self.gt_span, self.video_duration_s
            )));
        }
        match (&self.pos_span, &self.neg_span) {
            (None, None) => {}
            (Some(pos), Some(neg)) => {
                if pos.is_empty() || neg.is_empty() {
                    return Err(fail("pos/neg spans must have positive length".into()));
                }
                if !neg.contains(pos) {
                    return Err(fail(format!("pos {pos} not contained in neg {neg}")));
                }
                if !full.contains(neg) {
                    return Err(fail(format!(
                        "neg {neg} exceeds [0, {}]",
                        self.video_duration_s
                    )));
                }
            }
            _ => return Err(fail("pos and neg spans must be present together".into())),
        }
        Ok(())
    }

    /// The positive/negative span pair, required for crop sampling.
    pub fn crop_bounds(&self) -> Result<(TimeSpan, TimeSpan)> {
        let pos = self.pos_span.ok_or_else(|| Error::MissingField {
            field: "pos",
            context: format!("record {}", self.id),
        })?;
        let neg = self.neg_span.ok_or_else(|| Error::MissingField {
            field: "neg",
            context: format!("record {}", self.id),
        })?;
        Ok((pos, neg))
    }
}

/// Rounds to 2 decimal places, the precision of the record wire format.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(duration: f64, gt: (f64, f64)) -> GroundingRecord {
        GroundingRecord {
            id: "r0".into(),
            video_duration_s: duration,
            query: "something happens".into(),
            gt_span: TimeSpan::new(gt.0, gt.1).unwrap(),
            pos_span: None,
            neg_span: None,
        }
    }

    #[test]
    fn validate_accepts_plain_record() {
        record(30.0, (5.0, 10.0)).validate().unwrap();
    }

    #[test]
    fn validate_rejects_out_of_range_gt() {
        assert!(record(30.0, (5.0, 31.0)).validate().is_err());
        assert!(record(0.0, (0.0, 0.0)).validate().is_err());
    }

    #[test]
    fn validate_requires_paired_pos_neg() {
        let mut r = record(30.0, (5.0, 10.0));
        r.pos_span = Some(TimeSpan::new(5.0, 10.0).unwrap());
        assert!(r.validate().is_err());
        r.neg_span = Some(TimeSpan::new(2.0, 20.0).unwrap());
        r.validate().unwrap();
        r.neg_span = Some(TimeSpan::new(6.0, 20.0).unwrap());
        assert!(r.validate().is_err(), "pos must sit inside neg");
    }

    #[test]
    fn wire_format_round_trip() {
        let line = r#"{"id":"v1#0","duration":31.2,"query":"a person","gt":[4.1,9.8],"pos":[4.1,9.8],"neg":[0.0,17.5]}"#;
        let rec: GroundingRecord = serde_json::from_str(line).unwrap();
        rec.validate().unwrap();
        assert_eq!(rec.gt_span, TimeSpan::new(4.1, 9.8).unwrap());
        let back = serde_json::to_string(&rec).unwrap();
        let reparsed: GroundingRecord = serde_json::from_str(&back).unwrap();
        assert_eq!(reparsed, rec);
        // Optional spans stay absent rather than serializing as null.
        let plain: GroundingRecord =
            serde_json::from_str(r#"{"id":"x","duration":10,"query":"q","gt":[1,2]}"#).unwrap();
        assert!(!serde_json::to_string(&plain).unwrap().contains("pos"));
    }

    #[test]
    fn round2_behaves() {
        assert_eq!(round2(1.004), 1.0);
        assert_eq!(round2(1.006), 1.01);
        assert_eq!(round2(120.0), 120.0);
    }
}
