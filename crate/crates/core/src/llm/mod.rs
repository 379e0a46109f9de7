//! Language-model assistance for stuck sub-instances.
//!
//! Two protocols sit on top of a plain text-completion client:
//!
//! * **Inspire** shows the model the state, the goal, the actions taken so
//!   far in this episode and the applicable actions, and asks for one action.
//! * **Predict** asks for one or two atoms describing an intermediate state.
//!   The planner solves up to that state and then tries the sub-goal again.
//!
//! Malformed replies are re-queried up to [`REQUERY_LIMIT`] times. Only the
//! logical calls count towards reported LLM usage; re-queries are tracked
//! separately in [`CallLog`].

mod live;
mod mock;
mod prompts;
mod response;
mod steps;

use std::fmt;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use live::{LiveClient, LiveConfig, API_KEY_ENV, ENDPOINT_ENV, MODEL_ENV};
pub use mock::{FnClient, OracleClient, ScriptedClient};
pub use prompts::{
    domain_labels, render_direct_prompt, render_inspire_prompt, render_predict_prompt, InspireRequest,
    PredictRequest,
};
pub use response::{
    parse_inspire_response, parse_predict_response, InspireParseError, ParsedIntermediate, PredictParseError,
};
pub use steps::{inspire_step, predict_step, PredictContext, PredictFragment, StepError, REQUERY_LIMIT};

/// The one capability the planner needs from a language model.
pub trait CompletionClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, LlmError>;
}

impl<C: CompletionClient + ?Sized> CompletionClient for Box<C> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

impl<C: CompletionClient + ?Sized> CompletionClient for std::sync::Arc<C> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("LLM request failed: {0}")]
    Transport(String),
    #[error("LLM client misconfigured: {0}")]
    Config(String),
    #[error("scripted client has no responses left")]
    ScriptExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Inspire,
    Predict,
    Direct,
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptKind::Inspire => "inspire",
            PromptKind::Predict => "predict",
            PromptKind::Direct => "direct",
        })
    }
}

/// One prompt/response exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub mode: PromptKind,
    pub prompt: String,
    pub response: String,
    /// `accepted`, or why the reply was rejected.
    pub verdict: String,
}

/// Transcript and counters for one planning episode.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallLog {
    pub records: Vec<CallRecord>,
    /// Logical calls: one per inspire/predict step.
    pub calls: u64,
    /// Extra queries caused by malformed replies.
    pub requeries: u64,
}

impl CallLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Writes one JSON object per line.
    pub fn write_jsonl(&self, mut out: impl Write) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Appends the records to a JSON-lines file.
    pub fn append_to(&self, path: &Path) -> io::Result<()> {
        let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        let mut w = io::BufWriter::new(file);
        self.write_jsonl(&mut w)?;
        w.flush()
    }
}
