//! Parsers and renderers for the three answer representations a grounder can
//! emit: a multiple-choice letter/statement, a frame-index range, or a
//! second-level time range.

use std::sync::LazyLock;

use regex::Regex;

use crate::engine::frames::FramePlan;
use crate::error::{Error, Result};
use crate::span::{CoarseCategory, TimeSpan};

/// Which answer format a model was asked to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Coarse,
    FrameLevel,
    SecondLevel,
}

/// A parsed answer: a position class (coarse) or a concrete span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParsedAnswer {
    Category(CoarseCategory),
    Span(TimeSpan),
}

/// Context a parse needs: the option letter mapping for coarse answers, the
/// frame plan (timestamps + window) for the span-producing formats.
#[derive(Debug, Clone, Copy)]
pub struct AnswerContext<'a> {
    pub options: &'a [(char, CoarseCategory)],
    pub plan: &'a FramePlan,
}

/// Dispatches to the per-representation parser.
pub fn parse_answer(text: &str, repr: Representation, ctx: &AnswerContext) -> Result<ParsedAnswer> {
    match repr {
        Representation::Coarse => parse_coarse(text, ctx.options).map(ParsedAnswer::Category),
        Representation::FrameLevel => parse_frame_level(text, ctx.plan).map(ParsedAnswer::Span),
        Representation::SecondLevel => {
            parse_second_level(text, &ctx.plan.window()).map(ParsedAnswer::Span)
        }
    }
}

static OPTION_LETTER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\(([A-Da-d])\)").expect("static regex"));
static FRAME_RANGE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\bfrom\s+frame\s+(\d+)\s+to\s+frame\s+(\d+)").expect("static regex")
});
static SECOND_RANGE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\bfrom\s+second\s+(-?\d+(?:\.\d+)?)\s+to\s+second\s+(-?\d+(?:\.\d+)?)")
        .expect("static regex")
});

/// The four option statements, plus the one phrasing variant ("In the
/// middle ...") that shows up in the wild alongside the canonical "At the
/// middle ...".
const STATEMENT_FORMS: [(&str, CoarseCategory); 5] = [
    ("At the beginning of the video.", CoarseCategory::Beginning),
    ("At the middle of the video.", CoarseCategory::Middle),
    ("In the middle of the video.", CoarseCategory::Middle),
    ("At the end of the video.", CoarseCategory::End),
    ("Throughout the entire video.", CoarseCategory::Throughout),
];

/// Parses a multiple-choice answer: an option letter in parentheses, or one of
/// the four verbatim option statements.
pub fn parse_coarse(text: &str, options: &[(char, CoarseCategory)]) -> Result<CoarseCategory> {
    if let Some(caps) = OPTION_LETTER.captures(text) {
        let letter = caps[1]
            .chars()
            .next()
            .expect("regex guarantees one char")
            .to_ascii_uppercase();
        return options
            .iter()
            .find(|(l, _)| *l == letter)
            .map(|(_, c)| *c)
            .ok_or_else(|| {
                Error::MalformedAnswer(format!("option letter ({letter}) not among the options"))
            });
    }
    for (statement, category) in STATEMENT_FORMS {
        if text.contains(statement) {
            return Ok(category);
        }
    }
    Err(Error::MalformedAnswer(format!(
        "no option letter or statement in {text:?}"
    )))
}

/// Parses "From frame i to frame j." into the span between those frames'
/// timestamps (0-based indices into the plan).
pub fn parse_frame_level(text: &str, plan: &FramePlan) -> Result<TimeSpan> {
    let caps = FRAME_RANGE
        .captures(text)
        .ok_or_else(|| Error::MalformedAnswer(format!("no frame range in {text:?}")))?;
    let parse_idx = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::MalformedAnswer(format!("frame index {s:?} out of range")))
    };
    let i = parse_idx(&caps[1])?;
    let j = parse_idx(&caps[2])?;
    if i > j {
        return Err(Error::MalformedAnswer(format!(
            "frame range reversed: {i} > {j}"
        )));
    }
    let ts = plan.timestamps();
    if j >= ts.len() {
        return Err(Error::MalformedAnswer(format!(
            "frame index {j} out of range for {} frames",
            ts.len()
        )));
    }
    TimeSpan::new(ts[i], ts[j])
}

/// Parses "From second a to second b." into `[a, b]` clipped to the window.
pub fn parse_second_level(text: &str, window: &TimeSpan) -> Result<TimeSpan> {
    let caps = SECOND_RANGE
        .captures(text)
        .ok_or_else(|| Error::MalformedAnswer(format!("no second range in {text:?}")))?;
    let parse_num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::MalformedAnswer(format!("unparseable number {s:?}")))
    };
    let a = parse_num(&caps[1])?;
    let b = parse_num(&caps[2])?;
    if a > b {
        return Err(Error::MalformedAnswer(format!(
            "time range reversed: {a} > {b}"
        )));
    }
    let start = a.clamp(window.start_s, window.end_s);
    let end = b.clamp(window.start_s, window.end_s);
    TimeSpan::new(start, end)
}

/// Renders a coarse answer key, e.g. `(B)`.
pub fn render_coarse_answer(letter: char) -> String {
    format!("({letter})")
}

/// Renders a frame-level answer, e.g. `From frame 3 to frame 5.`
pub fn render_frame_level(i: usize, j: usize) -> String {
    format!("From frame {i} to frame {j}.")
}

/// Renders a second-level answer, e.g. `From second 4 to second 12.`
/// Whole seconds print without a decimal point, matching the prompt examples.
pub fn render_second_level(start_s: f64, end_s: f64) -> String {
    format!(
        "From second {} to second {}.",
        fmt_seconds(start_s),
        fmt_seconds(end_s)
    )
}

fn fmt_seconds(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}
