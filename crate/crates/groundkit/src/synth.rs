//! Synthetic grounding records for smoke tests and property runs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::record::{round2, GroundingRecord};
use crate::span::TimeSpan;

/// Generates `count` records with durations in [20, 200] s and ground-truth
/// length ratio uniform in (0, 0.5] of the duration — every record is
/// localizable to better than full-window IoU, which makes the set useful for
/// exercising the recursive grounder.
pub fn synthetic_records(count: usize, seed: u64) -> Vec<GroundingRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let duration = round2(rng.random_range(20.0..=200.0));
            // random_range over [0, 0.5) flipped to (0, 0.5].
            let ratio = 0.5 - rng.random_range(0.0..0.5);
            let len = (duration * ratio).max(0.05);
            let start = rng.random_range(0.0..=(duration - len));
            let gt = TimeSpan::new(round2(start), round2(start + len))
                .expect("synthetic span construction");
            GroundingRecord {
                id: format!("synth-{i:05}"),
                video_duration_s: duration,
                query: format!("synthetic event {i}"),
                gt_span: gt,
                pos_span: None,
                neg_span: None,
            }
        })
        .collect()
}
