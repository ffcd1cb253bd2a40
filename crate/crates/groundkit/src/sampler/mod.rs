//! Training-sample generation: random window cropping with optional category
//! balancing, plus prompt rendering for the two time-aware tasks.
//!
//! One mined segment can yield a different window — and therefore a different
//! multiple-choice answer — every epoch, which is the point: the answer
//! depends on where the crop lands, so a model cannot shortcut from the query
//! text straight to a category.

pub mod prompts;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::miner::MinedSegment;
use crate::span::{categorize, CoarseCategory, TimeSpan};

/// How `sample_crop` chooses windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CropMode {
    /// Window corners drawn uniformly from the crop rectangle.
    #[default]
    Uniform,
    /// A target category is drawn uniformly from the feasible set first, then
    /// windows are rejection-sampled until one realizes it.
    Balanced,
}

/// One cropped training window and the answer it induces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropSample {
    pub window: TimeSpan,
    pub answer: CoarseCategory,
    /// Id of the segment this sample was cropped from.
    pub record_ref: String,
    /// Presentation order of the four option statements (index 0 is "(A)").
    pub option_order: [CoarseCategory; 4],
    pub seed: u64,
}

/// Number of rejection attempts before balanced mode falls back to uniform.
const BALANCED_ATTEMPTS: usize = 64;

fn check_crop_bounds(segment: &MinedSegment) -> Result<()> {
    let (pos, neg) = (segment.pos_span, segment.neg_span);
    crate::span::ensure_positive(&pos, "positive span")?;
    crate::span::ensure_positive(&neg, "negative span")?;
    if pos.start_s < neg.start_s || pos.end_s > neg.end_s {
        return Err(Error::OutOfWindow {
            seg_start: pos.start_s,
            seg_end: pos.end_s,
            win_start: neg.start_s,
            win_end: neg.end_s,
        });
    }
    Ok(())
}

fn draw_window(rng: &mut ChaCha8Rng, pos: TimeSpan, neg: TimeSpan) -> TimeSpan {
    let start = if neg.start_s < pos.start_s {
        rng.random_range(neg.start_s..=pos.start_s)
    } else {
        pos.start_s
    };
    let end = if pos.end_s < neg.end_s {
        rng.random_range(pos.end_s..=neg.end_s)
    } else {
        pos.end_s
    };
    TimeSpan::new(start, end).expect("window brackets the positive span")
}

/// Draws one training window for `segment`.
///
/// The window start is uniform over `[neg.start, pos.start]` and the end
/// uniform over `[pos.end, neg.end]`, so the window always contains the
/// positive span and stays inside the negative span. `Balanced` mode first
/// picks a target category uniformly from [`feasible_categories`], then
/// redraws until the crop realizes it (capped at 64 tries, after which one
/// plain uniform draw is taken instead). A segment whose positive and
/// negative spans coincide admits exactly one window, so it is returned
/// directly with answer `Throughout`.
pub fn sample_crop(segment: &MinedSegment, seed: u64, mode: CropMode) -> Result<CropSample> {
    check_crop_bounds(segment)?;
    let (pos, neg) = (segment.pos_span, segment.neg_span);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (window, answer) = if pos == neg {
        (pos, CoarseCategory::Throughout)
    } else {
        match mode {
            CropMode::Uniform => {
                let window = draw_window(&mut rng, pos, neg);
                (window, categorize(&pos, &window)?)
            }
            CropMode::Balanced => {
                let feasible = feasible_categories(segment)?;
                let target = feasible[rng.random_range(0..feasible.len())];
                let mut hit = None;
                for _ in 0..BALANCED_ATTEMPTS {
                    let window = draw_window(&mut rng, pos, neg);
                    if categorize(&pos, &window)? == target {
                        hit = Some((window, target));
                        break;
                    }
                }
                match hit {
                    Some(found) => found,
                    None => {
                        let window = draw_window(&mut rng, pos, neg);
                        (window, categorize(&pos, &window)?)
                    }
                }
            }
        }
    };

    let mut option_order = CoarseCategory::ALL;
    option_order.shuffle(&mut rng);
    Ok(CropSample {
        window,
        answer,
        record_ref: segment.segment_id.clone(),
        option_order,
        seed,
    })
}

/// The set of categories some legal crop of `segment` can realize, in
/// canonical order.
///
/// Write `pos = [ps, pe]` with length `p`, `neg = [ns, ne]`, and a window
/// `[s, e]` with `s ∈ [ns, ps]`, `e ∈ [pe, ne]`, midpoint `m`, length `L`.
///
/// * Throughout (`p > L/2`) is always reachable: the window `[ps, pe]` has
///   `L = p`.
/// * Beginning needs `pe ≤ m`, i.e. `s + e ≥ 2·pe`. The sum is maximized at
///   `(ps, ne)`, so it is reachable iff `ne ≥ 2·pe − ps`; that corner also
///   satisfies the `L ≥ 2p` precedence requirement automatically.
/// * End mirrors it: reachable iff `ns ≤ 2·ps − pe`.
/// * Middle needs `m` strictly inside `(ps, pe)` with `L ≥ 2p`. Combining
///   `e ≥ s + 2p` with `s + e < 2·pe` forces `s < ps`; symmetrically
///   `e > pe`; and the window must fit, so `ne − ns ≥ 2p`. Conversely, given
///   those three, a window of half-length `p` centered as close to
///   `(ns + ne)/2` as the interior of `(ps, pe)` allows realizes Middle.
pub fn feasible_categories(segment: &MinedSegment) -> Result<Vec<CoarseCategory>> {
    check_crop_bounds(segment)?;
    let (ps, pe) = (segment.pos_span.start_s, segment.pos_span.end_s);
    let (ns, ne) = (segment.neg_span.start_s, segment.neg_span.end_s);
    let p = pe - ps;

    let mut out = Vec::with_capacity(4);
    if ne >= 2.0 * pe - ps {
        out.push(CoarseCategory::Beginning);
    }
    if ns < ps && ne > pe && ne - ns >= 2.0 * p {
        out.push(CoarseCategory::Middle);
    }
    if ns <= 2.0 * ps - pe {
        out.push(CoarseCategory::End);
    }
    out.push(CoarseCategory::Throughout);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn segment(pos: (f64, f64), neg: (f64, f64)) -> MinedSegment {
        MinedSegment {
            segment_id: "seg".into(),
            pos_span: TimeSpan::new(pos.0, pos.1).unwrap(),
            caption: "a person pours coffee".into(),
            neg_span: TimeSpan::new(neg.0, neg.1).unwrap(),
        }
    }

    /// The worked two-second-positive example: pos [38,40] inside neg [31,42].
    fn narrated_segment() -> MinedSegment {
        segment((38.0, 40.0), (31.0, 42.0))
    }

    #[test]
    fn narrated_crops_categorize_as_expected() {
        let pos = narrated_segment().pos_span;
        // [31,40]: midpoint 35.5 ≤ pos start, length 9 ≥ 2·2.
        let w = TimeSpan::new(31.0, 40.0).unwrap();
        assert_eq!(categorize(&pos, &w).unwrap(), CoarseCategory::End);
        // [36,42]: midpoint 39 strictly inside, length 6 ≥ 4.
        let w = TimeSpan::new(36.0, 42.0).unwrap();
        assert_eq!(categorize(&pos, &w).unwrap(), CoarseCategory::Middle);
    }

    #[test]
    fn samples_stay_inside_bounds_with_correct_answers() {
        let seg = narrated_segment();
        for seed in 0..500 {
            for mode in [CropMode::Uniform, CropMode::Balanced] {
                let s = sample_crop(&seg, seed, mode).unwrap();
                assert!(s.window.start_s >= 31.0 && s.window.start_s <= 38.0);
                assert!(s.window.end_s >= 40.0 && s.window.end_s <= 42.0);
                assert_eq!(s.answer, categorize(&seg.pos_span, &s.window).unwrap());
                assert_eq!(s.record_ref, "seg");
                assert_eq!(s.seed, seed);
                let mut sorted = s.option_order;
                sorted.sort_by_key(|c| *c as u8);
                assert_eq!(sorted, CoarseCategory::ALL);
            }
        }
    }

    #[test]
    fn degenerate_segment_yields_itself_as_throughout() {
        let seg = segment((5.0, 9.0), (5.0, 9.0));
        for mode in [CropMode::Uniform, CropMode::Balanced] {
            let s = sample_crop(&seg, 7, mode).unwrap();
            assert_eq!(s.window, seg.pos_span);
            assert_eq!(s.answer, CoarseCategory::Throughout);
        }
        assert_eq!(
            feasible_categories(&seg).unwrap(),
            vec![CoarseCategory::Throughout]
        );
    }

    #[test]
    fn same_seed_reproduces_different_seeds_vary() {
        let seg = narrated_segment();
        let a = sample_crop(&seg, 42, CropMode::Uniform).unwrap();
        let b = sample_crop(&seg, 42, CropMode::Uniform).unwrap();
        assert_eq!(a, b);
        let answers: std::collections::BTreeSet<CoarseCategory> = (0..100)
            .map(|seed| sample_crop(&seg, seed, CropMode::Uniform).unwrap().answer)
            .collect();
        assert!(answers.len() >= 2, "crops must vary across seeds: {answers:?}");
    }

    #[test]
    fn feasible_set_examples() {
        use CoarseCategory::*;
        // Both ends slack enough for everything.
        assert_eq!(
            feasible_categories(&narrated_segment()).unwrap(),
            vec![Beginning, Middle, End, Throughout]
        );
        // Start pinned at the positive's start: the midpoint can never move
        // strictly left of the positive, so only Beginning and Throughout.
        assert_eq!(
            feasible_categories(&segment((0.0, 5.0), (0.0, 100.0))).unwrap(),
            vec![Beginning, Throughout]
        );
        // End pinned: mirror image.
        assert_eq!(
            feasible_categories(&segment((95.0, 100.0), (0.0, 100.0))).unwrap(),
            vec![End, Throughout]
        );
        // Not enough room on either side for a window twice the positive.
        assert_eq!(
            feasible_categories(&segment((4.0, 10.0), (3.0, 11.0))).unwrap(),
            vec![Throughout]
        );
    }

    #[test]
    fn balanced_mode_roughly_equalizes_frequencies() {
        use std::collections::BTreeMap;
        let seg = segment((10.0, 16.0), (0.0, 26.0));
        assert_eq!(feasible_categories(&seg).unwrap().len(), 4);
        let mut counts: BTreeMap<CoarseCategory, usize> = BTreeMap::new();
        let n = 4_000;
        for seed in 0..n {
            let s = sample_crop(&seg, seed, CropMode::Balanced).unwrap();
            *counts.entry(s.answer).or_default() += 1;
        }
        for cat in CoarseCategory::ALL {
            let freq = counts[&cat] as f64 / n as f64;
            assert!(
                (freq - 0.25).abs() < 0.05,
                "{cat} frequency {freq:.3} strays from 0.25"
            );
        }
    }

    #[test]
    fn invalid_segments_are_rejected() {
        let mut seg = segment((5.0, 10.0), (6.0, 20.0));
        assert!(matches!(
            sample_crop(&seg, 0, CropMode::Uniform),
            Err(Error::OutOfWindow { .. })
        ));
        seg.neg_span = TimeSpan::new(0.0, 8.0).unwrap();
        assert!(sample_crop(&seg, 0, CropMode::Uniform).is_err());
    }

    proptest! {
        /// Every sampled answer must be one the closed-form set predicts.
        #[test]
        fn sampled_answers_lie_in_the_feasible_set(
            ns in 0.0f64..50.0,
            left in 0.01f64..20.0,
            len in 0.02f64..15.0,
            right in 0.01f64..20.0,
            seed in 0u64..u64::MAX,
            balanced in proptest::bool::ANY,
        ) {
            let ps = ns + left;
            let seg = segment((ps, ps + len), (ns, ps + len + right));
            let mode = if balanced { CropMode::Balanced } else { CropMode::Uniform };
            let sample = sample_crop(&seg, seed, mode).unwrap();
            let feasible = feasible_categories(&seg).unwrap();
            prop_assert!(feasible.contains(&sample.answer));
            prop_assert!(sample.window.start_s <= ps && sample.window.end_s >= ps + len);
        }
    }
}
