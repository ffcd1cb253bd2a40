//! Time intervals, the four-way position categorization, and IoU.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A closed interval in video time, in seconds.
///
/// Endpoints are finite, non-negative, and ordered (`start_s <= end_s`).
/// Zero-length spans are representable — clipping can produce them — but every
/// operation that treats a span as a ground truth, window, or prediction
/// requires positive length and says so.
///
/// Serializes as a two-element array `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSpan {
    pub start_s: f64,
    pub end_s: f64,
}

impl TimeSpan {
    /// Builds a span, rejecting non-finite, negative, or reversed endpoints.
    pub fn new(start_s: f64, end_s: f64) -> Result<Self> {
        if !start_s.is_finite() || !end_s.is_finite() {
            return Err(Error::InvalidSpan {
                start: start_s,
                end: end_s,
                reason: "endpoints must be finite",
            });
        }
        if start_s < 0.0 {
            return Err(Error::InvalidSpan {
                start: start_s,
                end: end_s,
                reason: "start is negative",
            });
        }
        if start_s > end_s {
            return Err(Error::InvalidSpan {
                start: start_s,
                end: end_s,
                reason: "start exceeds end",
            });
        }
        Ok(Self { start_s, end_s })
    }

    /// Span length in seconds.
    pub fn len(&self) -> f64 {
        self.end_s - self.start_s
    }

    /// True when the span has zero duration.
    pub fn is_empty(&self) -> bool {
        self.len() <= 0.0
    }

    /// Window midpoint in seconds.
    pub fn midpoint(&self) -> f64 {
        (self.start_s + self.end_s) / 2.0
    }

    /// True when `other` lies entirely inside `self` (boundaries inclusive).
    pub fn contains(&self, other: &TimeSpan) -> bool {
        self.start_s <= other.start_s && other.end_s <= self.end_s
    }

    /// The overlap of two spans, or `None` when they share at most a point.
    pub fn intersection(&self, other: &TimeSpan) -> Option<TimeSpan> {
        let start = self.start_s.max(other.start_s);
        let end = self.end_s.min(other.end_s);
        if start < end {
            Some(TimeSpan {
                start_s: start,
                end_s: end,
            })
        } else {
            None
        }
    }

    /// Alias for [`TimeSpan::intersection`] that reads better at call sites
    /// clipping a ground truth to a search window.
    pub fn clip_to(&self, window: &TimeSpan) -> Option<TimeSpan> {
        self.intersection(window)
    }
}

impl fmt::Display for TimeSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start_s, self.end_s)
    }
}

impl Serialize for TimeSpan {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [self.start_s, self.end_s].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TimeSpan {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [start, end] = <[f64; 2]>::deserialize(deserializer)?;
        TimeSpan::new(start, end).map_err(serde::de::Error::custom)
    }
}

/// Where a segment sits inside a window: the four coarse position classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoarseCategory {
    Beginning,
    Middle,
    End,
    Throughout,
}

impl CoarseCategory {
    /// All four categories in canonical order.
    pub const ALL: [CoarseCategory; 4] = [
        CoarseCategory::Beginning,
        CoarseCategory::Middle,
        CoarseCategory::End,
        CoarseCategory::Throughout,
    ];

    /// Lowercase label, matching the JSON encoding.
    pub fn as_str(&self) -> &'static str {
        match self {
            CoarseCategory::Beginning => "beginning",
            CoarseCategory::Middle => "middle",
            CoarseCategory::End => "end",
            CoarseCategory::Throughout => "throughout",
        }
    }
}

impl fmt::Display for CoarseCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classifies where `segment` sits inside `window`.
///
/// With `L` the window length and `mid` its midpoint, the rules apply in this
/// exact order:
///
/// 1. **Throughout** — segment length strictly greater than `L/2`;
/// 2. **Beginning** — `segment.end_s <= mid` (boundary inclusive);
/// 3. **End** — `segment.start_s >= mid` (boundary inclusive);
/// 4. **Middle** — everything else.
///
/// The precedence makes the four predicates a total partition of all
/// positive-length segments inside the window.
pub fn categorize(segment: &TimeSpan, window: &TimeSpan) -> Result<CoarseCategory> {
    ensure_positive(segment, "segment")?;
    ensure_positive(window, "window")?;
    if !window.contains(segment) {
        return Err(Error::OutOfWindow {
            seg_start: segment.start_s,
            seg_end: segment.end_s,
            win_start: window.start_s,
            win_end: window.end_s,
        });
    }
    if segment.len() > window.len() / 2.0 {
        return Ok(CoarseCategory::Throughout);
    }
    let mid = window.midpoint();
    if segment.end_s <= mid {
        Ok(CoarseCategory::Beginning)
    } else if segment.start_s >= mid {
        Ok(CoarseCategory::End)
    } else {
        Ok(CoarseCategory::Middle)
    }
}

/// Intersection-over-union of two positive-length spans; 0 when disjoint.
pub fn iou(a: &TimeSpan, b: &TimeSpan) -> Result<f64> {
    ensure_positive(a, "span")?;
    ensure_positive(b, "span")?;
    let inter = (a.end_s.min(b.end_s) - a.start_s.max(b.start_s)).max(0.0);
    let union = a.len() + b.len() - inter;
    Ok(inter / union)
}

pub(crate) fn ensure_positive(span: &TimeSpan, what: &'static str) -> Result<()> {
    if span.is_empty() {
        return Err(Error::ZeroLength {
            what,
            start: span.start_s,
            end: span.end_s,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn span(s: f64, e: f64) -> TimeSpan {
        TimeSpan::new(s, e).unwrap()
    }

    #[test]
    fn categorize_examples() {
        let w = span(0.0, 100.0);
        assert_eq!(categorize(&span(0.0, 30.0), &w).unwrap(), CoarseCategory::Beginning);
        assert_eq!(categorize(&span(20.0, 80.0), &w).unwrap(), CoarseCategory::Throughout);
        assert_eq!(categorize(&span(40.0, 60.0), &w).unwrap(), CoarseCategory::Middle);
        assert_eq!(categorize(&span(60.0, 90.0), &w).unwrap(), CoarseCategory::End);
        // Length exactly half is not "larger than half", and end exactly at the
        // midpoint is inclusive, so this is Beginning on both counts.
        assert_eq!(categorize(&span(0.0, 50.0), &w).unwrap(), CoarseCategory::Beginning);
        // Symmetric boundary on the End side.
        assert_eq!(categorize(&span(50.0, 100.0), &w).unwrap(), CoarseCategory::End);
    }

    #[test]
    fn categorize_rejects_bad_inputs() {
        let w = span(0.0, 10.0);
        assert!(matches!(
            categorize(&span(3.0, 3.0), &w),
            Err(Error::ZeroLength { what: "segment", .. })
        ));
        assert!(matches!(
            categorize(&span(1.0, 2.0), &span(5.0, 5.0)),
            Err(Error::ZeroLength { what: "window", .. })
        ));
        assert!(matches!(
            categorize(&span(5.0, 12.0), &w),
            Err(Error::OutOfWindow { .. })
        ));
    }

    #[test]
    fn iou_examples() {
        assert!((iou(&span(0.0, 10.0), &span(5.0, 15.0)).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(iou(&span(3.0, 7.0), &span(3.0, 7.0)).unwrap(), 1.0);
        assert_eq!(iou(&span(0.0, 1.0), &span(2.0, 3.0)).unwrap(), 0.0);
        assert!(matches!(
            iou(&span(1.0, 1.0), &span(0.0, 2.0)),
            Err(Error::ZeroLength { .. })
        ));
    }

    #[test]
    fn span_construction_guards() {
        assert!(TimeSpan::new(f64::NAN, 1.0).is_err());
        assert!(TimeSpan::new(-0.5, 1.0).is_err());
        assert!(TimeSpan::new(2.0, 1.0).is_err());
        assert!(TimeSpan::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn serde_round_trip() {
        let s = span(1.25, 7.5);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[1.25,7.5]");
        let back: TimeSpan = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<TimeSpan>("[5.0,2.0]").is_err());
    }

    /// Re-derivation of the four positional predicates, written directly from
    /// the prose rules rather than sharing any code with `categorize`.
    fn categorize_reference(seg: &TimeSpan, win: &TimeSpan) -> CoarseCategory {
        let half = (win.end_s - win.start_s) / 2.0;
        let mid = (win.start_s + win.end_s) / 2.0;
        if seg.end_s - seg.start_s > half {
            CoarseCategory::Throughout
        } else if seg.end_s <= mid {
            CoarseCategory::Beginning
        } else if seg.start_s >= mid {
            CoarseCategory::End
        } else {
            CoarseCategory::Middle
        }
    }

    proptest! {
        #[test]
        fn categorize_matches_reference(
            ws in 0.0f64..500.0,
            wlen in 0.01f64..500.0,
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
        ) {
            let win = span(ws, ws + wlen);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi > lo);
            let seg = span(ws + lo * wlen, ws + hi * wlen);
            prop_assert_eq!(categorize(&seg, &win).unwrap(), categorize_reference(&seg, &win));
        }

        /// Exactly one of the four predicates holds for any in-window segment.
        #[test]
        fn categorize_partition(
            ws in 0.0f64..500.0,
            wlen in 0.01f64..500.0,
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
        ) {
            let win = span(ws, ws + wlen);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi > lo);
            let seg = span(ws + lo * wlen, ws + hi * wlen);
            let mid = win.midpoint();
            let holds = [
                seg.len() > win.len() / 2.0,
                seg.len() <= win.len() / 2.0 && seg.end_s <= mid,
                seg.len() <= win.len() / 2.0 && seg.end_s > mid && seg.start_s >= mid,
                seg.len() <= win.len() / 2.0 && seg.end_s > mid && seg.start_s < mid,
            ];
            prop_assert_eq!(holds.iter().filter(|h| **h).count(), 1);
            let expected = [
                CoarseCategory::Throughout,
                CoarseCategory::Beginning,
                CoarseCategory::End,
                CoarseCategory::Middle,
            ][holds.iter().position(|h| *h).unwrap()];
            prop_assert_eq!(categorize(&seg, &win).unwrap(), expected);
        }

        #[test]
        fn iou_symmetric_bounded(
            s1 in 0.0f64..100.0, l1 in 0.01f64..100.0,
            s2 in 0.0f64..100.0, l2 in 0.01f64..100.0,
        ) {
            let a = span(s1, s1 + l1);
            let b = span(s2, s2 + l2);
            let ab = iou(&a, &b).unwrap();
            let ba = iou(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(iou(&a, &a).unwrap(), 1.0);
            if a != b {
                prop_assert!(ab < 1.0);
            }
        }
    }
}
