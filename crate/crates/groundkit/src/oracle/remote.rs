//! HTTP client oracle: forwards the four-way question to a model serving
//! endpoint.
//!
//! The request carries the rendered multiple-choice prompt plus the raw frame
//! timestamps and window, so the serving side (which owns video access) can
//! decode frames itself:
//!
//! ```json
//! {"prompt": "...", "frames": [2.5, 7.5, ...], "window": [0.0, 60.0]}
//! ```
//!
//! and the response is `{"answer": "..."}`, where the answer is an option
//! letter in parentheses or one of the four verbatim statements. Malformed
//! answers are retried up to the configured count; network-level failures are
//! not retried.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::engine::answer::parse_coarse;
use crate::engine::frames::FramePlan;
use crate::error::{Error, Result};
use crate::oracle::{ChoiceOracle, OracleFailure};
use crate::sampler::prompts::{render_inference_prompt, PromptBank};
use crate::span::{CoarseCategory, TimeSpan};

/// Connection settings for a remote oracle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteOracleConfig {
    /// Full URL of the choice endpoint, e.g. `http://host:8080/choose`.
    pub endpoint: String,
    /// Per-request timeout in milliseconds.
    pub timeout_ms: u64,
    /// How many times a *malformed* answer is re-asked before failing.
    pub retries: u32,
    /// Which instruction/question template pair renders the prompt.
    pub template_id: usize,
}

impl Default for RemoteOracleConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            timeout_ms: 30_000,
            retries: 2,
            template_id: 0,
        }
    }
}

/// A [`ChoiceOracle`] speaking the JSON protocol above.
#[derive(Clone)]
pub struct RemoteOracle {
    config: RemoteOracleConfig,
    agent: ureq::Agent,
    bank: &'static PromptBank,
}

#[derive(Serialize)]
struct ChoiceRequest<'a> {
    prompt: String,
    frames: &'a [f64],
    window: [f64; 2],
}

#[derive(Deserialize)]
struct ChoiceResponse {
    answer: String,
}

impl RemoteOracle {
    pub fn new(config: RemoteOracleConfig) -> Result<Self> {
        if config.endpoint.is_empty() {
            return Err(Error::InvalidArgument(
                "remote oracle needs an endpoint".into(),
            ));
        }
        if config.timeout_ms == 0 {
            return Err(Error::InvalidArgument(
                "remote oracle timeout must be positive".into(),
            ));
        }
        let bank = PromptBank::builtin()?;
        let n_templates = bank
            .grounding_instructions
            .len()
            .min(bank.question_templates.len());
        if config.template_id >= n_templates {
            return Err(Error::InvalidArgument(format!(
                "template id {} out of range (bank holds {n_templates})",
                config.template_id
            )));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .build()
            .into();
        Ok(Self {
            config,
            agent,
            bank,
        })
    }

    fn post(&self, request: &ChoiceRequest<'_>) -> std::result::Result<String, OracleFailure> {
        let sent = self.agent.post(&self.config.endpoint).send_json(request);
        let mut response = match sent {
            Ok(r) => r,
            Err(e) => return Err(self.classify(e)),
        };
        match response.body_mut().read_json::<ChoiceResponse>() {
            Ok(body) => Ok(body.answer),
            Err(e) => Err(OracleFailure::Connection(format!(
                "invalid response body: {e}"
            ))),
        }
    }

    fn classify(&self, e: ureq::Error) -> OracleFailure {
        match e {
            ureq::Error::Timeout(_) => OracleFailure::Timeout(self.config.timeout_ms),
            ureq::Error::StatusCode(code) => {
                OracleFailure::Connection(format!("HTTP status {code}"))
            }
            ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => {
                OracleFailure::Timeout(self.config.timeout_ms)
            }
            other => OracleFailure::Connection(other.to_string()),
        }
    }
}

impl ChoiceOracle for RemoteOracle {
    fn choose(
        &mut self,
        window: &TimeSpan,
        frames: &FramePlan,
        query: &str,
        options: &[(char, CoarseCategory); 4],
    ) -> std::result::Result<CoarseCategory, OracleFailure> {
        let prompt =
            render_inference_prompt(self.bank, self.config.template_id, query, frames, options)
                .expect("template id is validated at construction");
        let request = ChoiceRequest {
            prompt,
            frames: frames.timestamps(),
            window: [window.start_s, window.end_s],
        };
        let mut attempts = 0u32;
        loop {
            attempts += 1;
            let answer = self.post(&request)?;
            match parse_coarse(&answer, options) {
                Ok(category) => return Ok(category),
                Err(_) if attempts <= self.config.retries => continue,
                Err(_) => {
                    return Err(OracleFailure::Malformed {
                        attempts,
                        last_answer: answer,
                    })
                }
            }
        }
    }
}
