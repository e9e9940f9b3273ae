//! Follow-up question generation, from the template bank or a language model.

use std::fmt;
use std::sync::Arc;

use crate::llm::{CompletionRequest, LanguageModelClient, LlmError};
use crate::script::InterviewScript;

pub const FOLLOWUP_STAGE: &str = "followup";

pub const FOLLOWUP_PROMPT: &str = "You are a friendly interviewer. The participant just gave a short \
or unexplained answer. Ask exactly ONE short follow-up question that invites them to explain \
their reasoning. Reply with the question only, no preamble, ending with a question mark.";

#[derive(Clone, Default)]
pub enum FollowupMode {
    #[default]
    Template,
    Generative(Arc<dyn LanguageModelClient>),
}

impl fmt::Debug for FollowupMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FollowupMode::Template => f.write_str("Template"),
            FollowupMode::Generative(_) => f.write_str("Generative(..)"),
        }
    }
}

/// Question/answer pairs leading up to the follow-up, oldest first.
#[derive(Debug, Clone, Default)]
pub struct FollowupContext {
    pub turns: Vec<(String, String)>,
}

impl FollowupContext {
    fn render(&self) -> String {
        let mut out = String::new();
        for (question, answer) in &self.turns {
            out.push_str("Interviewer: ");
            out.push_str(question);
            out.push_str("\nParticipant: ");
            out.push_str(answer);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Followup {
    pub text: String,
    /// True when a template was consumed (the caller advances its cursor).
    pub from_template: bool,
}

/// Next follow-up. `templates_used` counts templates already asked this
/// session; once the bank runs out the last entry is reused.
pub fn generate_followup(
    context: &FollowupContext,
    mode: &FollowupMode,
    script: &InterviewScript,
    templates_used: usize,
) -> Followup {
    if let FollowupMode::Generative(client) = mode {
        match ask_model(client.as_ref(), context) {
            Ok(text) => {
                return Followup {
                    text,
                    from_template: false,
                }
            }
            Err(err) => tracing::warn!(error = %err, "generative follow-up failed, using template"),
        }
    }
    template_followup(script, templates_used)
}

fn template_followup(script: &InterviewScript, templates_used: usize) -> Followup {
    let templates = &script.followup_templates;
    let text = match templates.get(templates_used) {
        Some(t) => t.clone(),
        None => {
            tracing::warn!(templates = templates.len(), "follow-up templates exhausted, reusing last");
            templates.last().cloned().unwrap_or_default()
        }
    };
    Followup {
        text,
        from_template: true,
    }
}

fn ask_model(client: &dyn LanguageModelClient, context: &FollowupContext) -> Result<String, LlmError> {
    let input = context.render();
    let raw = client.complete(&CompletionRequest {
        stage: FOLLOWUP_STAGE,
        prompt: FOLLOWUP_PROMPT,
        input: &input,
        temperature: 0.7,
        feedback: None,
    })?;
    single_question(&raw).ok_or_else(|| LlmError::BadResponse(format!("not a question: {raw:?}")))
}

/// Reduce model output to its first question.
fn single_question(raw: &str) -> Option<String> {
    let line = raw
        .lines()
        .map(|l| l.trim().trim_matches('"').trim())
        .find(|l| !l.is_empty())?;
    let end = line.find('?')?;
    let question = line[..=end].trim();
    (question.len() > 1).then(|| question.to_string())
}
