//! Messages on the session stream that are not transcript events.
//!
//! Server events are transcript events serialized as they are stored
//! (`seq`, `t`, `kind`, `payload`); client messages are
//! [`interviewer_core::ClientEvent`]. Control messages carry a `type` tag
//! and no `seq`, so they never disturb event numbering.

use interviewer_core::transcript::SessionStatus;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerControl {
    InterviewComplete {
        session_id: String,
        status: SessionStatus,
        /// Where the finalized transcript can be fetched.
        transcript: String,
    },
    Heartbeat,
    Error {
        code: String,
        message: String,
    },
}

impl ServerControl {
    pub fn complete(session_id: &str, status: SessionStatus) -> Self {
        ServerControl::InterviewComplete {
            session_id: session_id.to_string(),
            status,
            transcript: transcript_path(session_id),
        }
    }

    pub fn error(code: &str, message: impl Into<String>) -> Self {
        ServerControl::Error {
            code: code.to_string(),
            message: message.into(),
        }
    }
}

pub fn transcript_path(session_id: &str) -> String {
    format!("/sessions/{session_id}/transcript")
}

pub fn stream_path(session_id: &str) -> String {
    format!("/sessions/{session_id}/stream")
}
