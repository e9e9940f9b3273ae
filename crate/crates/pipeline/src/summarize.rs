//! Stage 2: one structured record per corrected session.

use interviewer_core::llm::LanguageModelClient;
use interviewer_core::InterviewScript;
use serde_json::{json, Value};

use crate::client::{ask_validated, Ask};
use crate::correct::CorrectedSession;
use crate::prompts::Stage;
use crate::record::{parse_record, StructuredRecord};
use crate::{StageFailure, StageSettings};

pub fn theme_ids(script: &InterviewScript) -> Vec<String> {
    script.themes().map(|t| t.id.clone()).collect()
}

fn exchanges(session: &CorrectedSession, topic_id: &str) -> Vec<Value> {
    session
        .turns
        .iter()
        .filter(|t| t.topic_id == topic_id)
        .map(|t| json!({"question": t.question, "answer": t.corrected}))
        .collect()
}

pub(crate) fn summary_input(session: &CorrectedSession, script: &InterviewScript) -> String {
    let themes: Vec<Value> = script
        .themes()
        .map(|t| json!({"id": t.id, "label": t.display_label(), "exchanges": exchanges(session, &t.id)}))
        .collect();
    let experience = script
        .experience_topic()
        .map(|t| exchanges(session, &t.id))
        .unwrap_or_default();
    serde_json::to_string_pretty(&json!({
        "session_id": session.session_id,
        "themes": themes,
        "experience": {"exchanges": experience},
    }))
    .unwrap()
}

/// Summarize a corrected session into a record covering every theme of
/// `script`. A session without answers yields the all-unclear record
/// without consulting the model.
pub fn summarize_to_records(
    session: &CorrectedSession,
    script: &InterviewScript,
    client: &dyn LanguageModelClient,
    settings: &StageSettings,
) -> Result<StructuredRecord, StageFailure> {
    let ids = theme_ids(script);
    if session.turns.is_empty() {
        return Ok(StructuredRecord::vacuous(&session.session_id, &ids));
    }
    let input = summary_input(session, script);
    ask_validated(
        client,
        settings.retry,
        &Ask {
            stage: Stage::Summarize,
            prompt: settings.prompts.get(Stage::Summarize),
            input: &input,
            temperature: 0.0,
        },
        |v| parse_record(v, &session.session_id, &ids),
    )
}

#[cfg(test)]
mod tests {
    use interviewer_core::llm::ScriptedClient;
    use interviewer_core::understanding::AgreementClass;

    use super::*;
    use crate::client::RetryPolicy;
    use crate::correct::CorrectedTurn;
    use crate::prompts::PromptSet;

    fn settings() -> StageSettings {
        StageSettings {
            prompts: PromptSet::builtin(),
            retry: RetryPolicy::immediate(0),
            creative_temperature: 0.7,
        }
    }

    fn session(turns: Vec<CorrectedTurn>) -> CorrectedSession {
        CorrectedSession {
            session_id: "s".into(),
            script_id: "humanlike-ai".into(),
            turns,
        }
    }

    fn record_json(stance: &str) -> String {
        json!({
            "session_id": "s",
            "themes": {
                "interaction_qualities": {"stance": "unclear", "sentiment": "neutral", "motivation": ""},
                "human_like_traits": {"stance": stance, "sentiment": "positive", "motivation": "Preferences matter."},
                "negative_traits": {"stance": "unclear", "sentiment": "neutral", "motivation": ""},
                "misuse_strategies": {"stance": "unclear", "sentiment": "neutral", "motivation": ""}
            },
            "overall_experience": {"class": "neutral", "reason": ""}
        })
        .to_string()
    }

    fn dialogue_3() -> CorrectedSession {
        session(vec![CorrectedTurn {
            seq: 3,
            topic_id: "human_like_traits".into(),
            question: "Do you think conversational AI should aim to be human-like?".into(),
            original: "Yeah, not only human-like but also considering the user's preferences.".into(),
            corrected: "Yeah, not only human-like but also considering the user's preferences.".into(),
        }])
    }

    #[test]
    fn empty_session_is_all_unclear_without_model() {
        let script = InterviewScript::default_script();
        let client = ScriptedClient::always("not called");
        let r = summarize_to_records(&session(vec![]), &script, &client, &settings()).unwrap();
        assert_eq!(r.themes.len(), 4);
        assert!(r.themes.values().all(|a| a.stance == AgreementClass::Unclear));
        assert!(client.calls().is_empty());
    }

    #[test]
    fn agreement_fixture_parses() {
        let script = InterviewScript::default_script();
        let client = ScriptedClient::always(record_json("agree"));
        let r = summarize_to_records(&dialogue_3(), &script, &client, &settings()).unwrap();
        assert_eq!(r.themes["human_like_traits"].stance, AgreementClass::Agree);
    }

    #[test]
    fn invalid_stance_gets_one_repair_then_fails() {
        let script = InterviewScript::default_script();
        let client = ScriptedClient::always(record_json("maybe"));
        let err = summarize_to_records(&dialogue_3(), &script, &client, &settings()).unwrap_err();
        assert_eq!(client.calls(), vec!["summarize", "summarize"]);
        match err {
            StageFailure::Invalid(msg) => assert!(msg.contains("themes.human_like_traits.stance"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn repair_succeeds_on_second_answer() {
        let script = InterviewScript::default_script();
        let client = ScriptedClient::new(vec![Ok(record_json("maybe")), Ok(record_json("agree"))]);
        let r = summarize_to_records(&dialogue_3(), &script, &client, &settings()).unwrap();
        assert_eq!(r.themes["human_like_traits"].stance, AgreementClass::Agree);
    }

    #[test]
    fn input_groups_answers_by_theme() {
        let script = InterviewScript::default_script();
        let v: Value = serde_json::from_str(&summary_input(&dialogue_3(), &script)).unwrap();
        assert_eq!(v["themes"].as_array().unwrap().len(), 4);
        assert_eq!(v["themes"][1]["id"], "human_like_traits");
        assert_eq!(v["themes"][1]["exchanges"].as_array().unwrap().len(), 1);
        assert_eq!(v["experience"]["exchanges"].as_array().unwrap().len(), 0);
    }
}
