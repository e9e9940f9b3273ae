//! Stage 1: recognition-error correction of participant turns.

use interviewer_core::dialogue::ActionKind;
use interviewer_core::llm::LanguageModelClient;
use interviewer_core::transcript::EventBody;
use interviewer_core::{AsrStatus, SessionTranscript};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::client::{ask_validated, Ask};
use crate::prompts::Stage;
use crate::{StageFailure, StageSettings};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectedTurn {
    /// Transcript seq of the user utterance.
    pub seq: u64,
    pub topic_id: String,
    /// The question the turn answered.
    pub question: String,
    /// Recognized text as recorded, kept for audit.
    pub original: String,
    pub corrected: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectedSession {
    pub session_id: String,
    pub script_id: String,
    pub turns: Vec<CorrectedTurn>,
}

/// Recognized participant turns with the question each one answered.
/// Silent and unrecognized turns carry no text and are left out.
pub fn answered_turns(t: &SessionTranscript) -> Vec<CorrectedTurn> {
    let mut question = String::new();
    let mut turns = Vec::new();
    for event in &t.events {
        match &event.body {
            EventBody::SystemUtterance(a) if a.kind != ActionKind::Filler => question = a.text.clone(),
            EventBody::UserUtterance(u) if u.asr_status == AsrStatus::Ok && !u.text.trim().is_empty() => {
                turns.push(CorrectedTurn {
                    seq: event.seq,
                    topic_id: u.topic_id.clone(),
                    question: question.clone(),
                    original: u.text.clone(),
                    corrected: u.text.clone(),
                })
            }
            _ => {}
        }
    }
    turns
}

pub(crate) fn correction_input(turns: &[CorrectedTurn]) -> String {
    let turns: Vec<Value> = turns
        .iter()
        .enumerate()
        .map(|(i, t)| json!({"index": i, "question": t.question, "text": t.original}))
        .collect();
    serde_json::to_string_pretty(&json!({ "turns": turns })).unwrap()
}

fn parse_corrections(value: &Value, expected: usize) -> Result<Vec<String>, String> {
    let items = value
        .get("turns")
        .and_then(Value::as_array)
        .ok_or("turns: expected an array")?;
    if items.len() != expected {
        return Err(format!("turns: expected {expected} entries, got {}", items.len()));
    }
    let mut out = vec![None; expected];
    for (pos, item) in items.iter().enumerate() {
        let index = item["index"]
            .as_u64()
            .filter(|&i| (i as usize) < expected)
            .ok_or_else(|| format!("turns[{pos}].index: expected an index below {expected}"))?
            as usize;
        let text = item["text"]
            .as_str()
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| format!("turns[{pos}].text: expected a non-empty string"))?;
        if out[index].replace(text.to_string()).is_some() {
            return Err(format!("turns[{pos}].index: duplicate index {index}"));
        }
    }
    Ok(out.into_iter().map(Option::unwrap).collect())
}

/// Replace each recognized user turn's text with the model's correction.
/// The transcript must be finalized.
pub fn correct_transcript(
    t: &SessionTranscript,
    client: &dyn LanguageModelClient,
    settings: &StageSettings,
) -> Result<CorrectedSession, StageFailure> {
    if !t.is_finalized() {
        return Err(StageFailure::Precondition(format!(
            "session {} is not finalized",
            t.session_id
        )));
    }
    let mut turns = answered_turns(t);
    if !turns.is_empty() {
        let input = correction_input(&turns);
        let corrected = ask_validated(
            client,
            settings.retry,
            &Ask {
                stage: Stage::Correct,
                prompt: settings.prompts.get(Stage::Correct),
                input: &input,
                temperature: 0.0,
            },
            |v| parse_corrections(v, turns.len()),
        )?;
        for (turn, text) in turns.iter_mut().zip(corrected) {
            turn.corrected = text;
        }
    }
    Ok(CorrectedSession {
        session_id: t.session_id.clone(),
        script_id: t.script_id.clone(),
        turns,
    })
}

#[cfg(test)]
mod tests {
    use interviewer_core::llm::{LlmError, ScriptedClient};
    use interviewer_core::transcript::{AgentProfile, SessionStatus};

    use super::*;
    use crate::client::RetryPolicy;
    use crate::prompts::PromptSet;

    fn settings() -> StageSettings {
        StageSettings {
            prompts: PromptSet::builtin(),
            retry: RetryPolicy::immediate(2),
            creative_temperature: 0.7,
        }
    }

    fn transcript() -> SessionTranscript {
        use interviewer_core::simulate::{simulate, TraceFile, TraceTurn};
        let engine = interviewer_core::DialogueEngine::template(std::sync::Arc::new(
            interviewer_core::InterviewScript::default_script(),
        ));
        let trace = TraceFile {
            start_topic: Some("human_like_traits".into()),
            turns: vec![
                TraceTurn::said("i think it should be human like", 3.0),
                TraceTurn::silent(),
                TraceTurn::said("", 1.0),
            ],
        };
        let t = SessionTranscript::new("c1", "humanlike-ai", AgentProfile::AndroidLike, None);
        simulate(engine, Default::default(), t, &trace, |_| {}).unwrap()
    }

    #[test]
    fn identity_model_keeps_text() {
        let t = transcript();
        let echo = ScriptedClient::always(r#"{"turns":[{"index":0,"text":"i think it should be human like"}]}"#);
        let out = correct_transcript(&t, &echo, &settings()).unwrap();
        assert_eq!(out.turns.len(), 1);
        assert_eq!(out.turns[0].corrected, out.turns[0].original);
    }

    #[test]
    fn correction_keeps_original_for_audit() {
        let t = transcript();
        let fix = ScriptedClient::always(r#"{"turns":[{"index":0,"text":"I think it should be human-like."}]}"#);
        let out = correct_transcript(&t, &fix, &settings()).unwrap();
        assert_eq!(out.turns[0].original, "i think it should be human like");
        assert_eq!(out.turns[0].corrected, "I think it should be human-like.");
        assert_eq!(out.turns[0].question, "Do you think conversational AI should aim to be human-like?");
    }

    #[test]
    fn persistent_timeout_is_a_stage_failure() {
        let t = transcript();
        let client = ScriptedClient::failing(LlmError::Timeout);
        let err = correct_transcript(&t, &client, &settings()).unwrap_err();
        assert_eq!(err, StageFailure::Model(LlmError::Timeout));
        assert_eq!(client.calls().len(), 3);
    }

    #[test]
    fn wrong_turn_count_is_reprompted_once() {
        let t = transcript();
        let client = ScriptedClient::always(r#"{"turns":[]}"#);
        let err = correct_transcript(&t, &client, &settings()).unwrap_err();
        assert!(matches!(err, StageFailure::Invalid(ref m) if m.starts_with("turns:")));
        assert_eq!(client.calls().len(), 2);
    }

    #[test]
    fn active_sessions_are_rejected() {
        let mut t = transcript();
        t.status = SessionStatus::Active;
        let client = ScriptedClient::always("{}");
        assert!(matches!(
            correct_transcript(&t, &client, &settings()),
            Err(StageFailure::Precondition(_))
        ));
        assert!(client.calls().is_empty());
    }
}
