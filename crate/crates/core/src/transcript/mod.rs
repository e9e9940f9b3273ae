//! Session transcripts: the ordered event log of one interview.
//!
//! A transcript is one JSON document per session (`<session_id>.json`), with a
//! top-level `"v"` schema version. Event timestamps are milliseconds since
//! the session started so that replays are reproducible byte for byte.

mod store;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogue::{Phase, SystemAction, Transition};
use crate::gesture::GestureTag;
use crate::listening::BackchannelPlan;
use crate::repair::RepairDecision;
use crate::utterance::{AsrStatus, ProsodySummary};

pub use store::{is_valid_session_id, Durability, SessionFilter, SessionWriter, StoreError, TranscriptStore};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentProfile {
    AndroidLike,
    HumanoidLike,
}

impl std::str::FromStr for AgentProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "android_like" | "android" => Ok(AgentProfile::AndroidLike),
            "humanoid_like" | "humanoid" => Ok(AgentProfile::HumanoidLike),
            other => Err(format!("unknown agent profile `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Complete,
    /// Ended without reaching the closing (expired or aborted).
    Incomplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserTurnRecord {
    pub text: String,
    pub word_count: usize,
    pub duration_s: f64,
    pub asr_status: AsrStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prosody: Option<ProsodySummary>,
    /// Topic the answer was given under.
    pub topic_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateChange {
    pub topic_id: String,
    pub phase: Phase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Transition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    SystemUtterance(SystemAction),
    UserUtterance(UserTurnRecord),
    Backchannel(BackchannelPlan),
    Gesture(GestureTag),
    Repair(RepairDecision),
    StateChange(StateChange),
}

impl EventBody {
    pub fn kind_name(&self) -> &'static str {
        match self {
            EventBody::SystemUtterance(_) => "system_utterance",
            EventBody::UserUtterance(_) => "user_utterance",
            EventBody::Backchannel(_) => "backchannel",
            EventBody::Gesture(_) => "gesture",
            EventBody::Repair(_) => "repair",
            EventBody::StateChange(_) => "state_change",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEvent {
    pub seq: u64,
    /// Milliseconds since session start.
    pub t: u64,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderingError {
    #[error("expected seq {expected}, got {got}")]
    Seq { expected: u64, got: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub v: u32,
    pub session_id: String,
    pub script_id: String,
    pub agent_profile: AgentProfile,
    /// Calendar date the session was recorded (`YYYY-MM-DD`), when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
    /// Always 0: event times are relative to session start.
    pub started_at: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ended_at: Option<u64>,
    pub status: SessionStatus,
    pub events: Vec<TranscriptEvent>,
}

impl SessionTranscript {
    pub fn new(
        session_id: impl Into<String>,
        script_id: impl Into<String>,
        agent_profile: AgentProfile,
        date: Option<String>,
    ) -> Self {
        Self {
            v: SCHEMA_VERSION,
            session_id: session_id.into(),
            script_id: script_id.into(),
            agent_profile,
            date,
            started_at: 0,
            ended_at: None,
            status: SessionStatus::Active,
            events: Vec::new(),
        }
    }

    pub fn next_seq(&self) -> u64 {
        self.events.last().map_or(1, |e| e.seq + 1)
    }

    /// Append an event; its seq must be exactly one past the last.
    pub fn append(&mut self, event: TranscriptEvent) -> Result<(), OrderingError> {
        let expected = self.next_seq();
        if event.seq != expected {
            return Err(OrderingError::Seq {
                expected,
                got: event.seq,
            });
        }
        self.events.push(event);
        Ok(())
    }

    pub fn check_order(&self) -> Result<(), OrderingError> {
        for (i, event) in self.events.iter().enumerate() {
            let expected = i as u64 + 1;
            if event.seq != expected {
                return Err(OrderingError::Seq {
                    expected,
                    got: event.seq,
                });
            }
        }
        Ok(())
    }

    pub fn is_finalized(&self) -> bool {
        self.status != SessionStatus::Active
    }

    pub fn user_turns(&self) -> impl Iterator<Item = (&TranscriptEvent, &UserTurnRecord)> {
        self.events.iter().filter_map(|e| match &e.body {
            EventBody::UserUtterance(u) => Some((e, u)),
            _ => None,
        })
    }

    pub fn system_actions(&self) -> impl Iterator<Item = &SystemAction> {
        self.events.iter().filter_map(|e| match &e.body {
            EventBody::SystemUtterance(a) => Some(a),
            _ => None,
        })
    }

    /// Canonical serialized form.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("transcript serializes");
        out.push('\n');
        out
    }
}
