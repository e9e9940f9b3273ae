use std::path::PathBuf;
use std::sync::Arc;

use interviewer_core::listening::ProsodyFrame;
use interviewer_core::script::DEFAULT_SCRIPT_JSON;
use interviewer_core::simulate::{simulate, TraceFile};
use interviewer_core::transcript::AgentProfile;
use interviewer_core::{ClientEvent, DialogueEngine, InterviewScript, SessionConfig, SessionTranscript};
use serde_json::{json, Value};

fn validator(name: &str) -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../schemas")
        .join(format!("{name}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(v: &jsonschema::Validator, instance: &Value) {
    let errors: Vec<String> = v.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

fn full_transcript() -> SessionTranscript {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/traces/full_interview.json");
    let trace: TraceFile = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let engine = DialogueEngine::template(Arc::new(InterviewScript::default_script()));
    let t = SessionTranscript::new("schema", "humanlike-ai", AgentProfile::AndroidLike, Some("2024-11-20".into()));
    simulate(engine, SessionConfig::default(), t, &trace, |_| {}).unwrap()
}

#[test]
fn default_script_matches_schema() {
    let script: Value = serde_json::from_str(DEFAULT_SCRIPT_JSON).unwrap();
    assert_valid(&validator("interview_script"), &script);
}

#[test]
fn script_schema_rejects_missing_routing() {
    let mut script: Value = serde_json::from_str(DEFAULT_SCRIPT_JSON).unwrap();
    script["topics"][0].as_object_mut().unwrap().remove("routing");
    assert!(!validator("interview_script").is_valid(&script));
}

#[test]
fn simulated_transcript_matches_schema() {
    let t = full_transcript();
    let value: Value = serde_json::from_str(&t.to_json()).unwrap();
    assert_valid(&validator("transcript"), &value);
    let kinds: std::collections::BTreeSet<&str> = t.events.iter().map(|e| e.body.kind_name()).collect();
    for kind in ["system_utterance", "user_utterance", "backchannel", "gesture", "repair", "state_change"] {
        assert!(kinds.contains(kind), "fixture lacks {kind} events");
    }
}

#[test]
fn wire_messages_match_schema() {
    let wire = validator("wire");
    for event in full_transcript().events {
        assert_valid(&wire, &serde_json::to_value(&event).unwrap());
    }
    let client = [
        ClientEvent::UserText { text: "Yes.".into(), duration_s: 1.2, word_count: Some(1) },
        ClientEvent::ProsodyFrame(ProsodyFrame { t: 40, voiced: true, f0: 180.0, power: 60.0 }),
        ClientEvent::VoiceActivity { active: false },
    ];
    for message in client {
        assert_valid(&wire, &serde_json::to_value(&message).unwrap());
    }
    assert_valid(&wire, &json!({"type": "heartbeat"}));
    assert!(!wire.is_valid(&json!({"type": "user_text"})));
    assert!(!wire.is_valid(&json!({"seq": 0, "t": 0, "kind": "gesture", "payload": {}})));
}
