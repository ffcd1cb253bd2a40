//! Choice oracles: the pluggable answerers of the four-way position question.
//!
//! A grounder's "model" is abstracted to one call — *given this window, these
//! frames, this query, and these lettered options, where is the target?* —
//! which lets the same recursive driver run against ground truth (truthful),
//! corrupted ground truth (noisy), a recorded run (scripted), or a live model
//! behind an HTTP endpoint (remote).

mod remote;

pub use remote::{RemoteOracle, RemoteOracleConfig};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::frames::FramePlan;
use crate::error::Result;
use crate::span::{categorize, ensure_positive, CoarseCategory, TimeSpan};

/// A per-example failure while answering; scored (IoU 0) rather than fatal.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleFailure {
    #[error("request timed out after {0} ms")]
    Timeout(u64),
    #[error("connection failed: {0}")]
    Connection(String),
    #[error("malformed answer after {attempts} attempt(s), last: {last_answer:?}")]
    Malformed { attempts: u32, last_answer: String },
    #[error("scripted choices exhausted at round {round}")]
    ScriptExhausted { round: usize },
}

impl OracleFailure {
    /// Short machine-readable kind for report rows.
    pub fn kind(&self) -> &'static str {
        match self {
            OracleFailure::Timeout(_) => "timeout",
            OracleFailure::Connection(_) => "connection",
            OracleFailure::Malformed { .. } => "malformed",
            OracleFailure::ScriptExhausted { .. } => "script-exhausted",
        }
    }
}

/// The answering contract. One instance serves one example's rounds in order;
/// implementations declaring `concurrent_safe` may additionally be shared.
pub trait ChoiceOracle: Send {
    fn choose(
        &mut self,
        window: &TimeSpan,
        frames: &FramePlan,
        query: &str,
        options: &[(char, CoarseCategory); 4],
    ) -> std::result::Result<CoarseCategory, OracleFailure>;

    /// Whether one instance may be invoked from several workers at once.
    fn concurrent_safe(&self) -> bool {
        true
    }
}

/// The ground-truth answer for a window: categorize the clipped ground truth,
/// or point toward it when the window has lost it entirely (nearest-end
/// policy: `Beginning` when the target lies before the window, `End` after).
pub fn truthful_choose(gt_span: &TimeSpan, window: &TimeSpan) -> Result<CoarseCategory> {
    ensure_positive(gt_span, "gt span")?;
    ensure_positive(window, "window")?;
    match gt_span.clip_to(window) {
        Some(clipped) => categorize(&clipped, window),
        None => {
            if gt_span.end_s <= window.start_s {
                Ok(CoarseCategory::Beginning)
            } else {
                Ok(CoarseCategory::End)
            }
        }
    }
}

/// Answers every question from the ground truth.
#[derive(Debug, Clone)]
pub struct TruthfulOracle {
    gt_span: TimeSpan,
}

impl TruthfulOracle {
    pub fn new(gt_span: TimeSpan) -> Self {
        Self { gt_span }
    }
}

impl ChoiceOracle for TruthfulOracle {
    fn choose(
        &mut self,
        window: &TimeSpan,
        _frames: &FramePlan,
        _query: &str,
        _options: &[(char, CoarseCategory); 4],
    ) -> std::result::Result<CoarseCategory, OracleFailure> {
        // Inputs come from the driver, which guarantees positive lengths.
        Ok(truthful_choose(&self.gt_span, window).expect("driver passes positive-length spans"))
    }
}

/// One noisy decision: keep the truthful category with probability
/// `1 - epsilon`, otherwise answer one of the other three uniformly.
pub fn noisy_choose(
    truthful: CoarseCategory,
    epsilon: f64,
    rng: &mut impl Rng,
) -> CoarseCategory {
    if rng.random::<f64>() < epsilon {
        let others: Vec<CoarseCategory> = CoarseCategory::ALL
            .into_iter()
            .filter(|c| *c != truthful)
            .collect();
        others[rng.random_range(0..others.len())]
    } else {
        truthful
    }
}

/// A truthful oracle with a seeded error rate — the knob for studying how
/// grounding quality degrades with answer accuracy.
#[derive(Debug, Clone)]
pub struct NoisyOracle {
    gt_span: TimeSpan,
    epsilon: f64,
    rng: ChaCha8Rng,
}

impl NoisyOracle {
    pub fn new(gt_span: TimeSpan, epsilon: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(crate::error::Error::InvalidArgument(format!(
                "epsilon must be in [0, 1], got {epsilon}"
            )));
        }
        Ok(Self {
            gt_span,
            epsilon,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl ChoiceOracle for NoisyOracle {
    fn choose(
        &mut self,
        window: &TimeSpan,
        _frames: &FramePlan,
        _query: &str,
        _options: &[(char, CoarseCategory); 4],
    ) -> std::result::Result<CoarseCategory, OracleFailure> {
        let truthful =
            truthful_choose(&self.gt_span, window).expect("driver passes positive-length spans");
        Ok(noisy_choose(truthful, self.epsilon, &mut self.rng))
    }

    /// Stateful RNG: one instance per example, never shared.
    fn concurrent_safe(&self) -> bool {
        false
    }
}

/// Replays a fixed choice sequence, e.g. from a stored trace.
#[derive(Debug, Clone)]
pub struct ScriptedOracle {
    choices: Vec<CoarseCategory>,
    cursor: usize,
}

impl ScriptedOracle {
    pub fn new(choices: Vec<CoarseCategory>) -> Self {
        Self { choices, cursor: 0 }
    }
}

impl ChoiceOracle for ScriptedOracle {
    fn choose(
        &mut self,
        _window: &TimeSpan,
        _frames: &FramePlan,
        _query: &str,
        _options: &[(char, CoarseCategory); 4],
    ) -> std::result::Result<CoarseCategory, OracleFailure> {
        let round = self.cursor;
        let choice = self
            .choices
            .get(round)
            .copied()
            .ok_or(OracleFailure::ScriptExhausted { round })?;
        self.cursor += 1;
        Ok(choice)
    }

    fn concurrent_safe(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::frames::frame_plan;

    fn span(s: f64, e: f64) -> TimeSpan {
        TimeSpan::new(s, e).unwrap()
    }

    #[test]
    fn truthful_examples() {
        assert_eq!(
            truthful_choose(&span(10.0, 20.0), &span(0.0, 100.0)).unwrap(),
            CoarseCategory::Beginning
        );
        // gt occupying 10%..55% of the window straddles the midpoint at 45%
        // length: Middle.
        assert_eq!(
            truthful_choose(&span(10.0, 55.0), &span(0.0, 100.0)).unwrap(),
            CoarseCategory::Middle
        );
        // Nearest-end policy when the window lost the target.
        assert_eq!(
            truthful_choose(&span(10.0, 20.0), &span(50.0, 100.0)).unwrap(),
            CoarseCategory::Beginning
        );
        assert_eq!(
            truthful_choose(&span(80.0, 90.0), &span(0.0, 50.0)).unwrap(),
            CoarseCategory::End
        );
        // A single shared boundary point is an empty intersection.
        assert_eq!(
            truthful_choose(&span(0.0, 50.0), &span(50.0, 100.0)).unwrap(),
            CoarseCategory::Beginning
        );
    }

    #[test]
    fn truthful_never_throughout_when_half_or_less() {
        // Property spot-check on a grid: clipped gt <= half window never
        // yields Throughout.
        let window = span(0.0, 64.0);
        for s in 0..64 {
            for e in (s + 1)..=64 {
                let gt = span(s as f64, e as f64);
                let clipped = gt.clip_to(&window).unwrap();
                let got = truthful_choose(&gt, &window).unwrap();
                if clipped.len() <= window.len() / 2.0 {
                    assert_ne!(got, CoarseCategory::Throughout, "gt {gt}");
                } else {
                    assert_eq!(got, CoarseCategory::Throughout, "gt {gt}");
                }
            }
        }
    }

    #[test]
    fn noisy_epsilon_extremes() {
        let gt = span(10.0, 20.0);
        let window = span(0.0, 100.0);
        let plan = frame_plan(&window, 4).unwrap();
        let options = crate::engine::shuffled_options(&mut ChaCha8Rng::seed_from_u64(1));

        let mut zero = NoisyOracle::new(gt, 0.0, 99).unwrap();
        let mut truthful = TruthfulOracle::new(gt);
        for _ in 0..50 {
            assert_eq!(
                zero.choose(&window, &plan, "q", &options).unwrap(),
                truthful.choose(&window, &plan, "q", &options).unwrap()
            );
        }

        let mut one = NoisyOracle::new(gt, 1.0, 99).unwrap();
        for _ in 0..50 {
            let got = one.choose(&window, &plan, "q", &options).unwrap();
            assert_ne!(got, CoarseCategory::Beginning); // the truthful answer
        }

        assert!(NoisyOracle::new(gt, 1.5, 0).is_err());
    }

    #[test]
    fn noisy_rate_monte_carlo() {
        // epsilon 0.5 over 10^5 trials: truthful-answer rate within 0.5 ± 0.01.
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let truthful = CoarseCategory::Beginning;
        let kept = (0..n)
            .filter(|_| noisy_choose(truthful, 0.5, &mut rng) == truthful)
            .count();
        let rate = kept as f64 / n as f64;
        assert!((rate - 0.5).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn scripted_replays_then_exhausts() {
        let mut oracle = ScriptedOracle::new(vec![
            CoarseCategory::End,
            CoarseCategory::Throughout,
        ]);
        let window = span(0.0, 10.0);
        let plan = frame_plan(&window, 2).unwrap();
        let options = crate::engine::shuffled_options(&mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(
            oracle.choose(&window, &plan, "q", &options).unwrap(),
            CoarseCategory::End
        );
        assert_eq!(
            oracle.choose(&window, &plan, "q", &options).unwrap(),
            CoarseCategory::Throughout
        );
        assert_eq!(
            oracle.choose(&window, &plan, "q", &options).unwrap_err(),
            OracleFailure::ScriptExhausted { round: 2 }
        );
    }
}
