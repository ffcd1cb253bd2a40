//! The instruction-template bank and prompt renderers for the two time-aware
//! training tasks, plus the inference-time prompt used against remote models.
//!
//! The bank ships as a checksum-pinned JSON asset embedded into the binary;
//! any edit to the asset must be deliberate and update the pinned digest.
//! Rendered prompts follow the `###Human:` / `###Assistant:` chat convention,
//! and emitted training samples carry a character-offset span marking the
//! loss-bearing `{answer} ###` suffix.

use std::sync::LazyLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::answer::render_coarse_answer;
use crate::engine::frames::FramePlan;
use crate::error::{Error, Result};
use crate::miner::MinedSegment;
use crate::sampler::CropSample;
use crate::span::CoarseCategory;

/// Bytes of the bundled template bank.
pub const PROMPT_BANK_JSON: &str = include_str!("../../assets/prompt_bank.json");

/// SHA-256 of the bundled bank; external bank files must match it.
pub const PROMPT_BANK_SHA256: &str =
    "d4bc58964d39feae9bff515fade2d129312af6176c2dd398fa3f0e2114aa0822";

/// The fixed template inventory every prompt is assembled from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBank {
    pub grounding_instructions: Vec<String>,
    /// Question templates with a `%s` placeholder for the query text.
    pub question_templates: Vec<String>,
    /// Option statements in canonical category order.
    pub option_statements: Vec<String>,
    pub captioning_instructions: Vec<String>,
    /// Position statements in canonical category order.
    pub temporal_statements: Vec<String>,
    /// Frame-count preamble with `{num_frames}` and `{timestamps}` holes.
    pub preamble: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

impl PromptBank {
    /// Parses and validates a bank from raw JSON bytes, enforcing the pinned
    /// checksum.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let digest = sha256_hex(bytes);
        if digest != PROMPT_BANK_SHA256 {
            return Err(Error::TemplateMismatch(format!(
                "prompt bank checksum {digest} does not match the pinned {PROMPT_BANK_SHA256}"
            )));
        }
        let bank: PromptBank = serde_json::from_slice(bytes)
            .map_err(|e| Error::TemplateMismatch(format!("prompt bank is not valid JSON: {e}")))?;
        bank.validate()?;
        Ok(bank)
    }

    /// Reads a bank from a JSON file on disk.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|source| Error::Io {
            action: "read prompt bank",
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }

    /// The bank embedded in the binary.
    pub fn builtin() -> Result<&'static Self> {
        static BUILTIN: LazyLock<std::result::Result<PromptBank, String>> =
            LazyLock::new(|| PromptBank::from_bytes(PROMPT_BANK_JSON.as_bytes())
                .map_err(|e| e.to_string()));
        BUILTIN
            .as_ref()
            .map_err(|e| Error::TemplateMismatch(e.clone()))
    }

    /// Structural checks: list sizes and placeholder presence.
    pub fn validate(&self) -> Result<()> {
        let expect = |name: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(Error::TemplateMismatch(format!(
                    "bank has {got} {name}, expected {want}"
                )))
            }
        };
        expect("grounding instructions", self.grounding_instructions.len(), 10)?;
        expect("question templates", self.question_templates.len(), 10)?;
        expect("option statements", self.option_statements.len(), 4)?;
        expect("captioning instructions", self.captioning_instructions.len(), 10)?;
        expect("temporal statements", self.temporal_statements.len(), 4)?;
        for q in &self.question_templates {
            if !q.contains("%s") {
                return Err(Error::TemplateMismatch(format!(
                    "question template lacks a %s placeholder: {q}"
                )));
            }
        }
        for hole in ["{num_frames}", "{timestamps}"] {
            if !self.preamble.contains(hole) {
                return Err(Error::TemplateMismatch(format!(
                    "preamble lacks the {hole} placeholder"
                )));
            }
        }
        Ok(())
    }

    /// The statement describing `category`, as shown in option lists.
    pub fn option_statement(&self, category: CoarseCategory) -> &str {
        &self.option_statements[category as usize]
    }

    /// The statement describing `category`, as used by the captioning task.
    pub fn temporal_statement(&self, category: CoarseCategory) -> &str {
        &self.temporal_statements[category as usize]
    }

    /// Expands the frame preamble for a concrete frame plan.
    pub fn render_preamble(&self, plan: &FramePlan) -> String {
        self.preamble
            .replace("{num_frames}", &plan.num_frames().to_string())
            .replace("{timestamps}", &plan.render_timestamp_list())
    }
}

/// A fully rendered training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedSample {
    /// Complete prompt text, answer included.
    pub prompt: String,
    /// The loss-bearing answer alone (letter key or caption).
    pub answer: String,
    /// Character (not byte) offsets of `"{answer} ###"` within `prompt`.
    pub loss_span: (usize, usize),
}

fn assemble(prefix: String, answer: &str) -> RenderedSample {
    let loss_start = prefix.chars().count();
    let prompt = format!("{prefix}{answer} ###");
    let loss_end = prompt.chars().count();
    RenderedSample {
        prompt,
        answer: answer.to_string(),
        loss_span: (loss_start, loss_end),
    }
}

fn option_block(bank: &PromptBank, order: &[CoarseCategory; 4]) -> String {
    order
        .iter()
        .enumerate()
        .map(|(i, cat)| {
            let letter = (b'A' + i as u8) as char;
            format!("({letter}) {}", bank.option_statement(*cat))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn check_plan_matches(sample: &CropSample, plan: &FramePlan) -> Result<()> {
    if plan.window() != sample.window {
        return Err(Error::InvalidArgument(format!(
            "frame plan covers {} but the sample window is {}",
            plan.window(),
            sample.window
        )));
    }
    Ok(())
}

/// Renders the multiple-choice grounding task for one crop sample.
///
/// The instruction and question template are drawn seeded-uniformly from the
/// bank; the option statements follow `sample.option_order` with letters
/// reassigned; the answer is the letter key of the statement matching
/// `sample.answer`.
pub fn render_grounding_prompt(
    bank: &PromptBank,
    segment: &MinedSegment,
    sample: &CropSample,
    plan: &FramePlan,
    rng_seed: u64,
) -> Result<RenderedSample> {
    check_plan_matches(sample, plan)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let instruction = &bank.grounding_instructions
        [rng.random_range(0..bank.grounding_instructions.len())];
    let template = &bank.question_templates[rng.random_range(0..bank.question_templates.len())];
    let question = template.replace("%s", &segment.caption);
    let options = option_block(bank, &sample.option_order);

    let position = sample
        .option_order
        .iter()
        .position(|c| *c == sample.answer)
        .expect("option order is a permutation of all categories");
    let letter = (b'A' + position as u8) as char;
    let answer = render_coarse_answer(letter);

    let prefix = format!(
        "{instruction}\n###Human: <Video></Video> {}\n###Human: Question: {question} Options: {options}\n###Assistant: ",
        bank.render_preamble(plan),
    );
    Ok(assemble(prefix, &answer))
}

/// Renders the segment-captioning task for one crop sample: the human turn
/// states where the segment lies (the statement for `sample.answer`) and the
/// training target is the segment's caption.
pub fn render_captioning_prompt(
    bank: &PromptBank,
    segment: &MinedSegment,
    sample: &CropSample,
    plan: &FramePlan,
    rng_seed: u64,
) -> Result<RenderedSample> {
    check_plan_matches(sample, plan)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let instruction = &bank.captioning_instructions
        [rng.random_range(0..bank.captioning_instructions.len())];
    let statement = bank.temporal_statement(sample.answer);

    let prefix = format!(
        "{instruction}\n###Human: <Video></Video> {}\n###Human: {statement}\n###Assistant: ",
        bank.render_preamble(plan),
    );
    Ok(assemble(prefix, &segment.caption))
}

/// Renders the grounding prompt used when querying a model at inference
/// time: same shape as the training prompt, but it ends right after
/// `###Assistant:` with no answer.
pub fn render_inference_prompt(
    bank: &PromptBank,
    template_id: usize,
    query: &str,
    plan: &FramePlan,
    options: &[(char, CoarseCategory); 4],
) -> Result<String> {
    if template_id >= bank.question_templates.len() {
        return Err(Error::InvalidArgument(format!(
            "template id {template_id} out of range 0..{}",
            bank.question_templates.len()
        )));
    }
    let instruction = &bank.grounding_instructions[template_id];
    let question = bank.question_templates[template_id].replace("%s", query);
    let options = options
        .iter()
        .map(|(letter, cat)| format!("({letter}) {}", bank.option_statement(*cat)))
        .collect::<Vec<_>>()
        .join(" ");
    Ok(format!(
        "{instruction}\n###Human: <Video></Video> {}\n###Human: Question: {question} Options: {options}\n###Assistant:",
        bank.render_preamble(plan),
    ))
}
