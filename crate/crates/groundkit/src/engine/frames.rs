//! Frame-timestamp sampling for a search window.

use crate::error::{Error, Result};
use crate::span::{ensure_positive, TimeSpan};

/// The frames a grounder "looks at" during one round: `num_frames` timestamps
/// inside the current window.
///
/// Timestamps sit at the midpoints of equal sub-intervals (bin midpoints), so
/// halving a window never reproduces the parent's exact timestamps — each
/// round of a trace is distinguishable by its frame list.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePlan {
    window: TimeSpan,
    timestamps: Vec<f64>,
}

/// Samples `num_frames` bin-midpoint timestamps from `window`.
pub fn frame_plan(window: &TimeSpan, num_frames: usize) -> Result<FramePlan> {
    ensure_positive(window, "window")?;
    if num_frames == 0 {
        return Err(Error::InvalidArgument("num_frames must be >= 1".into()));
    }
    let step = window.len() / num_frames as f64;
    let timestamps = (0..num_frames)
        .map(|i| window.start_s + (i as f64 + 0.5) * step)
        .collect();
    Ok(FramePlan {
        window: *window,
        timestamps,
    })
}

impl FramePlan {
    /// The window the frames were sampled from.
    pub fn window(&self) -> TimeSpan {
        self.window
    }

    pub fn num_frames(&self) -> usize {
        self.timestamps.len()
    }

    /// Timestamps in seconds, strictly increasing, all inside the window.
    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    /// Render for prompts: 1 decimal place, comma-separated.
    pub fn render_timestamp_list(&self) -> String {
        self.timestamps
            .iter()
            .map(|t| format!("{t:.1}"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn span(s: f64, e: f64) -> TimeSpan {
        TimeSpan::new(s, e).unwrap()
    }

    #[test]
    fn bin_midpoints() {
        let plan = frame_plan(&span(0.0, 12.0), 12).unwrap();
        let expected: Vec<f64> = (0..12).map(|i| i as f64 + 0.5).collect();
        assert_eq!(plan.timestamps(), expected.as_slice());

        assert_eq!(frame_plan(&span(0.0, 10.0), 1).unwrap().timestamps(), &[5.0]);
        assert_eq!(
            frame_plan(&span(6.0, 10.0), 4).unwrap().timestamps(),
            &[6.5, 7.5, 8.5, 9.5]
        );
    }

    #[test]
    fn timestamps_strictly_increasing_inside_window() {
        let w = span(3.7, 9.1);
        for n in [1, 2, 5, 12, 64] {
            let plan = frame_plan(&w, n).unwrap();
            assert_eq!(plan.num_frames(), n);
            for pair in plan.timestamps().windows(2) {
                assert!(pair[0] < pair[1]);
            }
            for t in plan.timestamps() {
                assert!(*t > w.start_s && *t < w.end_s);
            }
        }
    }

    #[test]
    fn rendering_uses_one_decimal() {
        let plan = frame_plan(&span(0.0, 1.0), 3).unwrap();
        assert_eq!(plan.render_timestamp_list(), "0.2, 0.5, 0.8");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(frame_plan(&span(2.0, 2.0), 4).is_err());
        assert!(frame_plan(&span(0.0, 10.0), 0).is_err());
    }
}
