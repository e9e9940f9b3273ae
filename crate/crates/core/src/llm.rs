//! The language-model client interface shared by generative follow-ups and
//! the post-interview pipeline.

use std::sync::Mutex;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("model request timed out")]
    Timeout,
    #[error("model transport failure: {0}")]
    Transport(String),
    #[error("model returned an unusable response: {0}")]
    BadResponse(String),
    #[error("no fixture for stage `{stage}` and input {input_hash}")]
    MissingFixture { stage: String, input_hash: String },
    #[error("prompt for stage `{stage}` changed: fixture pinned to {pinned}, prompt hashes to {actual}")]
    PromptDrift {
        stage: String,
        pinned: String,
        actual: String,
    },
}

impl LlmError {
    /// Failures worth retrying.
    pub fn is_transient(&self) -> bool {
        matches!(self, LlmError::Timeout | LlmError::Transport(_))
    }
}

/// One completion call. `stage` names the caller so mocks can key fixtures
/// and logs can attribute cost. `prompt` is the instruction template as
/// written; `feedback` carries the validation error from a rejected
/// previous answer, if any.
#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    pub stage: &'a str,
    pub prompt: &'a str,
    pub input: &'a str,
    pub temperature: f32,
    pub feedback: Option<&'a str>,
}

impl CompletionRequest<'_> {
    /// Instruction text as sent to a model, feedback included.
    pub fn full_prompt(&self) -> String {
        match self.feedback {
            None => self.prompt.to_string(),
            Some(err) => format!(
                "{}\n\nYour previous answer was rejected: {err}\nReply again with corrected output only.",
                self.prompt
            ),
        }
    }
}

pub trait LanguageModelClient: Send + Sync {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, LlmError>;
}

impl<T: LanguageModelClient + ?Sized> LanguageModelClient for std::sync::Arc<T> {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}

impl<T: LanguageModelClient + ?Sized> LanguageModelClient for &T {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}

/// Returns queued responses in order, then repeats the last one.
#[derive(Debug, Default)]
pub struct ScriptedClient {
    responses: Mutex<Vec<Result<String, LlmError>>>,
    calls: Mutex<Vec<String>>,
}

impl ScriptedClient {
    pub fn new(responses: Vec<Result<String, LlmError>>) -> Self {
        Self {
            responses: Mutex::new(responses.into_iter().rev().collect()),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn always(response: impl Into<String>) -> Self {
        Self::new(vec![Ok(response.into())])
    }

    pub fn failing(error: LlmError) -> Self {
        Self::new(vec![Err(error)])
    }

    /// Stages of every call made so far.
    pub fn calls(&self) -> Vec<String> {
        self.calls.lock().unwrap().clone()
    }
}

impl LanguageModelClient for ScriptedClient {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, LlmError> {
        self.calls.lock().unwrap().push(request.stage.to_string());
        let mut queue = self.responses.lock().unwrap();
        if queue.len() > 1 {
            queue.pop().unwrap()
        } else {
            queue
                .last()
                .cloned()
                .unwrap_or_else(|| Err(LlmError::Transport("no scripted response".into())))
        }
    }
}
