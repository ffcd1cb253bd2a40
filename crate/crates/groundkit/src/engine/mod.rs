//! The recursive grounding driver, window transitions, the exhaustive
//! choice-sequence upperbound, and the random baseline.

pub mod answer;
pub mod frames;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{ChoiceOracle, OracleFailure};
use crate::record::GroundingRecord;
use crate::span::{ensure_positive, iou, CoarseCategory, TimeSpan};
use frames::frame_plan;

/// Why a grounding run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// The oracle answered Throughout, which ends the search.
    ThroughoutBreak,
    /// The round budget ran out.
    MaxRounds,
    /// The oracle failed; the trace is partial.
    OracleError,
}

/// One round of a grounding run: the window the question was asked about, the
/// frames shown, and the oracle's choice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRound {
    pub window: TimeSpan,
    pub frame_timestamps: Vec<f64>,
    pub choice: CoarseCategory,
}

/// Full history of a grounding run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundingTrace {
    pub rounds: Vec<TraceRound>,
    pub final_window: TimeSpan,
    pub terminated_by: Termination,
}

/// A grounding run that died on an oracle failure, with however much trace
/// accumulated before the failure.
#[derive(Debug)]
pub enum GroundingError {
    /// Bad record or arguments — a caller bug, not a per-example outcome.
    Invalid(Error),
    /// The oracle failed mid-run; scored as a failed example.
    Oracle {
        failure: OracleFailure,
        partial: GroundingTrace,
    },
}

impl From<Error> for GroundingError {
    fn from(e: Error) -> Self {
        GroundingError::Invalid(e)
    }
}

/// Shrinks `window` according to a choice. `Beginning` keeps the first half,
/// `End` the second half, `Middle` the central half; `Throughout` leaves the
/// window unchanged (the driver breaks its loop instead).
pub fn window_update(window: &TimeSpan, choice: CoarseCategory) -> Result<TimeSpan> {
    ensure_positive(window, "window")?;
    let (s, e) = (window.start_s, window.end_s);
    let len = window.len();
    match choice {
        CoarseCategory::Beginning => TimeSpan::new(s, s + len / 2.0),
        CoarseCategory::End => TimeSpan::new(s + len / 2.0, e),
        CoarseCategory::Middle => TimeSpan::new(s + len / 4.0, e - len / 4.0),
        CoarseCategory::Throughout => Ok(*window),
    }
}

/// Runs the recursive grounding loop: ask, shrink, repeat.
///
/// Starting from `[0, duration]`, each round samples a [`FramePlan`], shuffles
/// the four options (seeded by `rng_seed`), asks the oracle, and applies
/// [`window_update`]; a `Throughout` answer breaks early. Returns the final
/// window with the full trace.
pub fn recursive_ground(
    oracle: &mut dyn ChoiceOracle,
    record: &GroundingRecord,
    max_rounds: usize,
    num_frames: usize,
    rng_seed: u64,
) -> std::result::Result<(TimeSpan, GroundingTrace), GroundingError> {
    let mut window = record.full_window()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut rounds = Vec::with_capacity(max_rounds);
    let mut terminated_by = Termination::MaxRounds;

    for _ in 0..max_rounds {
        let plan = frame_plan(&window, num_frames)?;
        let options = shuffled_options(&mut rng);
        match oracle.choose(&window, &plan, &record.query, &options) {
            Err(failure) => {
                return Err(GroundingError::Oracle {
                    failure,
                    partial: GroundingTrace {
                        rounds,
                        final_window: window,
                        terminated_by: Termination::OracleError,
                    },
                })
            }
            Ok(choice) => {
                rounds.push(TraceRound {
                    window,
                    frame_timestamps: plan.timestamps().to_vec(),
                    choice,
                });
                if choice == CoarseCategory::Throughout {
                    terminated_by = Termination::ThroughoutBreak;
                    break;
                }
                window = window_update(&window, choice)?;
            }
        }
    }

    Ok((
        window,
        GroundingTrace {
            rounds,
            final_window: window,
            terminated_by,
        },
    ))
}

/// The four categories in a seeded-random order, lettered A-D by position.
pub fn shuffled_options(rng: &mut impl Rng) -> [(char, CoarseCategory); 4] {
    let mut order = CoarseCategory::ALL;
    order.shuffle(rng);
    std::array::from_fn(|i| ((b'A' + i as u8) as char, order[i]))
}

/// Best IoU any sequence of at most `max_rounds` choices can reach — the
/// ceiling of the coarse representation itself, independent of any oracle.
///
/// Enumerates windows in pre-order over (Beginning, Middle, End) branches —
/// a Throughout choice keeps the parent window and ends a branch, so it never
/// produces a new window and needs no explicit branch. Ties keep the earliest
/// window in that order, i.e. the lexicographically first choice sequence.
pub fn upperbound(record: &GroundingRecord, max_rounds: usize) -> Result<(TimeSpan, f64)> {
    let gt = record.gt_span;
    ensure_positive(&gt, "gt span")?;
    let full = record.full_window()?;
    let mut best = (full, iou(&full, &gt)?);
    descend(&full, &gt, max_rounds, &mut best)?;
    Ok(best)
}

fn descend(
    window: &TimeSpan,
    gt: &TimeSpan,
    rounds_left: usize,
    best: &mut (TimeSpan, f64),
) -> Result<()> {
    if rounds_left == 0 {
        return Ok(());
    }
    for choice in [
        CoarseCategory::Beginning,
        CoarseCategory::Middle,
        CoarseCategory::End,
    ] {
        let next = window_update(window, choice)?;
        let score = iou(&next, gt)?;
        if score > best.1 {
            *best = (next, score);
        }
        descend(&next, gt, rounds_left - 1, best)?;
    }
    Ok(())
}

/// A span of (up to) `span_len` seconds placed uniformly at random in the
/// video; the model-free floor every grounder should beat.
pub fn random_baseline(record: &GroundingRecord, span_len: f64, rng_seed: u64) -> Result<TimeSpan> {
    if !(span_len.is_finite() && span_len > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "span_len must be positive, got {span_len}"
        )));
    }
    let full = record.full_window()?;
    let duration = full.len();
    let len = span_len.min(duration);
    let max_start = duration - len;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let start = if max_start > 0.0 {
        rng.random_range(0.0..=max_start)
    } else {
        0.0
    };
    TimeSpan::new(start, start + len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::TruthfulOracle;

    fn span(s: f64, e: f64) -> TimeSpan {
        TimeSpan::new(s, e).unwrap()
    }

    fn record(duration: f64, gt: (f64, f64)) -> GroundingRecord {
        GroundingRecord {
            id: "test".into(),
            video_duration_s: duration,
            query: "q".into(),
            gt_span: span(gt.0, gt.1),
            pos_span: None,
            neg_span: None,
        }
    }

    #[test]
    fn window_update_examples() {
        let w = span(0.0, 100.0);
        assert_eq!(window_update(&w, CoarseCategory::Beginning).unwrap(), span(0.0, 50.0));
        assert_eq!(window_update(&w, CoarseCategory::Middle).unwrap(), span(25.0, 75.0));
        assert_eq!(window_update(&w, CoarseCategory::End).unwrap(), span(50.0, 100.0));
        assert_eq!(window_update(&w, CoarseCategory::Throughout).unwrap(), w);
        assert!(window_update(&span(5.0, 5.0), CoarseCategory::Beginning).is_err());
    }

    #[test]
    fn worked_trace() {
        // duration 100, gt [10,20]: Beginning -> [0,50], Beginning -> [0,25],
        // Middle -> [6.25,18.75]; IoU = 8.75/13.75 = 7/11.
        let rec = record(100.0, (10.0, 20.0));
        let mut oracle = TruthfulOracle::new(rec.gt_span);
        let (final_window, trace) = recursive_ground(&mut oracle, &rec, 3, 12, 7).unwrap();
        let choices: Vec<_> = trace.rounds.iter().map(|r| r.choice).collect();
        assert_eq!(
            choices,
            vec![
                CoarseCategory::Beginning,
                CoarseCategory::Beginning,
                CoarseCategory::Middle
            ]
        );
        assert_eq!(final_window, span(6.25, 18.75));
        assert_eq!(trace.terminated_by, Termination::MaxRounds);
        let v = iou(&final_window, &rec.gt_span).unwrap();
        assert!((v - 7.0 / 11.0).abs() <= 1e-9);
        assert_eq!(format!("{v:.4}"), "0.6364");
    }

    #[test]
    fn throughout_breaks_immediately() {
        let rec = record(100.0, (10.0, 80.0));
        let mut oracle = TruthfulOracle::new(rec.gt_span);
        let (final_window, trace) = recursive_ground(&mut oracle, &rec, 3, 12, 7).unwrap();
        assert_eq!(final_window, span(0.0, 100.0));
        assert_eq!(trace.rounds.len(), 1);
        assert_eq!(trace.terminated_by, Termination::ThroughoutBreak);
        assert!((iou(&final_window, &rec.gt_span).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn zero_rounds_returns_full_window() {
        let rec = record(42.0, (1.0, 2.0));
        let mut oracle = TruthfulOracle::new(rec.gt_span);
        let (final_window, trace) = recursive_ground(&mut oracle, &rec, 0, 12, 7).unwrap();
        assert_eq!(final_window, span(0.0, 42.0));
        assert!(trace.rounds.is_empty());
        assert_eq!(trace.terminated_by, Termination::MaxRounds);
    }

    #[test]
    fn window_nesting_and_halving() {
        let rec = record(128.0, (3.0, 9.0));
        let mut oracle = TruthfulOracle::new(rec.gt_span);
        let (_, trace) = recursive_ground(&mut oracle, &rec, 5, 12, 7).unwrap();
        let mut prev = span(0.0, 128.0);
        let mut expected_len = 128.0;
        for round in &trace.rounds {
            assert!(prev.contains(&round.window));
            assert_eq!(round.window.len(), expected_len);
            if round.choice != CoarseCategory::Throughout {
                expected_len /= 2.0;
            }
            prev = round.window;
        }
    }

    #[test]
    fn upperbound_examples() {
        // One round from [0,100] reaches {[0,50],[25,75],[50,100]} plus the
        // root; for gt [10,20] the best is [0,50] at IoU 0.2.
        let (w, v) = upperbound(&record(100.0, (10.0, 20.0)), 1).unwrap();
        assert_eq!(w, span(0.0, 50.0));
        assert!((v - 0.2).abs() < 1e-12);

        let (_, v) = upperbound(&record(100.0, (0.0, 50.0)), 1).unwrap();
        assert_eq!(v, 1.0);

        let (w, v) = upperbound(&record(100.0, (10.0, 20.0)), 0).unwrap();
        assert_eq!(w, span(0.0, 100.0));
        assert!((v - 0.1).abs() < 1e-12);
    }

    #[test]
    fn upperbound_tie_breaks_toward_earliest_sequence() {
        // gt = the whole video: every proper sub-window scores strictly below
        // the root, and the root (the empty choice sequence) is kept.
        let (w, v) = upperbound(&record(100.0, (0.0, 100.0)), 3).unwrap();
        assert_eq!(w, span(0.0, 100.0));
        assert_eq!(v, 1.0);

        // Symmetric gt [45,55]: Beginning [0,50] and End [50,100] tie at 1/11,
        // but Middle [25,75] wins outright at 0.2.
        let (w, _) = upperbound(&record(100.0, (45.0, 55.0)), 1).unwrap();
        assert_eq!(w, span(25.0, 75.0));
    }

    #[test]
    fn random_baseline_behaviour() {
        let rec = record(10.0, (1.0, 2.0));
        assert_eq!(random_baseline(&rec, 20.0, 1).unwrap(), span(0.0, 10.0));

        let rec = record(100.0, (1.0, 2.0));
        let a = random_baseline(&rec, 8.0, 123).unwrap();
        assert!((a.len() - 8.0).abs() < 1e-12);
        assert!(a.start_s >= 0.0 && a.end_s <= 100.0);
        assert_eq!(a, random_baseline(&rec, 8.0, 123).unwrap());
        assert_ne!(a, random_baseline(&rec, 8.0, 124).unwrap());
        assert!(random_baseline(&rec, 0.0, 1).is_err());
    }
}
