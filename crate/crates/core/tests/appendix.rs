use std::path::PathBuf;
use std::sync::Arc;

use interviewer_core::dialogue::ActionKind;
use interviewer_core::gesture::GestureTag;
use interviewer_core::simulate::{simulate, TraceFile};
use interviewer_core::transcript::{AgentProfile, EventBody, SessionTranscript};
use interviewer_core::understanding::SentimentClass;
use interviewer_core::{DialogueEngine, InterviewScript, SessionConfig, SystemAction, Transition};

fn trace(name: &str) -> TraceFile {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/traces")
        .join(format!("{name}.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// The system's reply to the single user turn, with the transition it caused.
fn reply(name: &str) -> (SystemAction, Option<Transition>) {
    let engine = DialogueEngine::template(Arc::new(InterviewScript::default_script()));
    let transcript = SessionTranscript::new(name, "humanlike-ai", AgentProfile::AndroidLike, None);
    let t = simulate(engine, SessionConfig::default(), transcript, &trace(name), |_| {}).unwrap();
    let action = t.system_actions().nth(1).cloned().expect("system replied");
    let transition = t.events.iter().find_map(|e| match &e.body {
        EventBody::StateChange(c) => c.transition.clone(),
        _ => None,
    });
    (action, transition)
}

#[test]
fn dialogue_1_short_answer_without_reason_gets_followup() {
    let (action, transition) = reply("appendix_dialogue_1");
    assert_eq!(action.kind, ActionKind::Ask);
    assert_eq!(action.topic_id, "interaction_qualities");
    assert_eq!(
        action.text,
        "Interesting! Can you tell me more about why you think that's so important?"
    );
    assert_eq!(transition, None);
}

#[test]
fn dialogue_2_long_answer_moves_on() {
    let (action, transition) = reply("appendix_dialogue_2");
    assert!(action.text.starts_with("That's a good point! So, let's move on."));
    assert_eq!(action.gesture, Some(GestureTag::LeanBack));
    assert_eq!(
        transition,
        Some(Transition::Advance {
            from: "interaction_qualities".into(),
            to: "human_like_traits".into()
        })
    );
}

#[test]
fn dialogue_3_agreement_routes_to_negative_traits() {
    let (action, transition) = reply("appendix_dialogue_3");
    assert_eq!(
        action.text,
        "Okay, that's interesting! And what about negative human traits? Should conversational AI include these as well?"
    );
    assert_eq!(
        transition,
        Some(Transition::Advance {
            from: "human_like_traits".into(),
            to: "negative_traits".into()
        })
    );
}

#[test]
fn dialogue_4_disagreement_routes_to_misuse() {
    let (action, transition) = reply("appendix_dialogue_4");
    assert_eq!(
        action.text,
        "Makes sense! So, what would you do to prevent misuse of conversational AI?"
    );
    assert_eq!(
        transition,
        Some(Transition::Advance {
            from: "human_like_traits".into(),
            to: "misuse_strategies".into()
        })
    );
}

#[test]
fn dialogue_5_positive_experience_closes_warmly() {
    let (action, transition) = reply("appendix_dialogue_5");
    assert_eq!(action.kind, ActionKind::Close);
    assert_eq!(
        action.text,
        "I'm glad that you enjoyed this conversation. I appreciate your time! Have a wonderful day!"
    );
    assert_eq!(action.gesture, Some(GestureTag::Bow));
    assert_eq!(transition, Some(Transition::Close { sentiment: SentimentClass::Positive }));
}

#[test]
fn dialogue_6_negative_experience_closes_courteously() {
    let (action, transition) = reply("appendix_dialogue_6");
    assert_eq!(action.kind, ActionKind::Close);
    assert_eq!(
        action.text,
        "I'm sorry to hear that, but I appreciate your honesty. Thank you for your time."
    );
    assert_eq!(transition, Some(Transition::Close { sentiment: SentimentClass::Negative }));
}
