//! Reference implementations the integration suites check the library
//! against. Each one is written straight from the definitions — no production
//! code is reused — so agreement is evidence, not tautology.
#![allow(dead_code)]

use std::path::Path;

use groundkit::record::GroundingRecord;
use groundkit::span::CoarseCategory;

/// Intersection-over-union on raw endpoint pairs.
pub fn iou_ref(a: (f64, f64), b: (f64, f64)) -> f64 {
    let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0.0);
    let union = (a.1 - a.0) + (b.1 - b.0) - inter;
    inter / union
}

/// Four-way position classification, restated from the definitions.
pub fn categorize_ref(seg: (f64, f64), win: (f64, f64)) -> CoarseCategory {
    let mid = (win.0 + win.1) / 2.0;
    if seg.1 - seg.0 > (win.1 - win.0) / 2.0 {
        CoarseCategory::Throughout
    } else if seg.1 <= mid {
        CoarseCategory::Beginning
    } else if seg.0 >= mid {
        CoarseCategory::End
    } else {
        CoarseCategory::Middle
    }
}

/// One window-narrowing step for `choice`.
pub fn step_ref(win: (f64, f64), choice: CoarseCategory) -> (f64, f64) {
    let (s, e) = win;
    let len = e - s;
    match choice {
        CoarseCategory::Beginning => (s, s + len / 2.0),
        CoarseCategory::End => (s + len / 2.0, e),
        CoarseCategory::Middle => (s + len / 4.0, e - len / 4.0),
        CoarseCategory::Throughout => win,
    }
}

/// Replays a stored choice sequence from the whole-video window; a
/// `Throughout` choice stops the walk with the window unchanged.
pub fn replay_trace(duration: f64, choices: &[CoarseCategory]) -> (f64, f64) {
    let mut win = (0.0, duration);
    for &choice in choices {
        if choice == CoarseCategory::Throughout {
            break;
        }
        win = step_ref(win, choice);
    }
    win
}

/// Best IoU any choice sequence of at most `k` narrowing steps can reach,
/// by exhaustive pre-order enumeration (a strictly better window replaces
/// the incumbent; ties keep the earlier one).
pub fn brute_upperbound(duration: f64, gt: (f64, f64), k: usize) -> ((f64, f64), f64) {
    fn visit(win: (f64, f64), gt: (f64, f64), left: usize, best: &mut ((f64, f64), f64)) {
        let score = iou_ref(win, gt);
        if score > best.1 {
            *best = (win, score);
        }
        if left > 0 {
            for choice in [
                CoarseCategory::Beginning,
                CoarseCategory::Middle,
                CoarseCategory::End,
            ] {
                visit(step_ref(win, choice), gt, left - 1, best);
            }
        }
    }
    let mut best = ((f64::NAN, f64::NAN), -1.0);
    visit((0.0, duration), gt, k, &mut best);
    best
}

/// Negative-span endpoints by direct scan, given per-segment similarity
/// flags: the end of the last similar segment before the positive one (else
/// 0), and the start of the first similar segment after it (else the end of
/// the final segment).
pub fn brute_negative_span(spans: &[(f64, f64)], pos: usize, similar: &[bool]) -> (f64, f64) {
    let mut start = 0.0;
    for j in 0..pos {
        if similar[j] {
            start = spans[j].1;
        }
    }
    let mut end = spans.last().expect("nonempty layout").1;
    if let Some(j) = (pos + 1..spans.len()).find(|&j| similar[j]) {
        end = spans[j].0;
    }
    (start, end)
}

/// Position classification on integer-second endpoints in exact integer
/// arithmetic (doubling both sides clears the halves).
pub fn categorize_int(seg: (i64, i64), win: (i64, i64)) -> CoarseCategory {
    if 2 * (seg.1 - seg.0) > win.1 - win.0 {
        CoarseCategory::Throughout
    } else if 2 * seg.1 <= win.0 + win.1 {
        CoarseCategory::Beginning
    } else if 2 * seg.0 >= win.0 + win.1 {
        CoarseCategory::End
    } else {
        CoarseCategory::Middle
    }
}

/// Every category some integer-second window in the crop rectangle realizes,
/// by full enumeration, in canonical order.
pub fn grid_feasible(pos: (i64, i64), neg: (i64, i64)) -> Vec<CoarseCategory> {
    let mut found = [false; 4];
    for ws in neg.0..=pos.0 {
        for we in pos.1..=neg.1 {
            found[categorize_int(pos, (ws, we)) as usize] = true;
        }
    }
    CoarseCategory::ALL
        .into_iter()
        .filter(|c| found[*c as usize])
        .collect()
}

/// Writes a deterministic synthetic records file and returns the records.
pub fn write_synthetic(path: &Path, count: usize, seed: u64) -> Vec<GroundingRecord> {
    let records = groundkit::synth::synthetic_records(count, seed);
    groundkit::io::write_jsonl(path, &records).expect("write synthetic records");
    records
}
