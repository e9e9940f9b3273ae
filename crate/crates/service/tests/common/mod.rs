#![allow(dead_code)]

use std::path::PathBuf;

use interviewer_service::config::ServiceConfig;
use serde_json::Value;
use tempfile::TempDir;

pub struct Dirs {
    pub data: TempDir,
    pub scripts: TempDir,
}

pub fn config() -> (ServiceConfig, Dirs) {
    let dirs = Dirs {
        data: tempfile::tempdir().unwrap(),
        scripts: tempfile::tempdir().unwrap(),
    };
    let mut config = ServiceConfig::new(dirs.data.path().to_path_buf(), dirs.scripts.path().to_path_buf());
    config.timing.heartbeat_s = 3600.0;
    config.timing.idle_expiry_s = 3600.0;
    config.timing.tick_ms = 10;
    (config, dirs)
}

pub fn validator(name: &str) -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../schemas")
        .join(format!("{name}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

pub fn assert_valid(v: &jsonschema::Validator, instance: &Value) {
    let errors: Vec<String> = v.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{instance}\n{errors:#?}");
}

pub const AGREE: &str = "Yes, I agree, because it makes the conversation feel natural.";
pub const ENJOYED: &str = "It was fun and I enjoyed it a lot.";

pub fn user_text(text: &str) -> Value {
    let words = text.split_whitespace().count();
    serde_json::json!({"type": "user_text", "text": text, "duration_s": words as f64 * 0.4})
}

/// The last question asked among `events`, as (topic_id, action kind).
pub fn last_system(events: &[Value]) -> Option<(String, String)> {
    events
        .iter()
        .rev()
        .find(|e| e["kind"] == "system_utterance")
        .map(|e| {
            (
                e["payload"]["topic_id"].as_str().unwrap().to_string(),
                e["payload"]["kind"].as_str().unwrap().to_string(),
            )
        })
}

/// What a participant says next: agreement on themes, enjoyment at the end.
pub fn answer_for(topic: &str) -> &'static str {
    let script = interviewer_core::InterviewScript::default_script();
    if script.experience_topic().is_some_and(|t| t.id == topic) {
        ENJOYED
    } else {
        AGREE
    }
}
