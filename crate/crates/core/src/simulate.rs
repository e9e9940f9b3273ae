//! Virtual-time interviews driven by a trace of user turns.
//!
//! The participant starts answering a fixed gap after the system stops
//! speaking; their answer is accompanied by a synthesized prosody track, so
//! backchannels fire exactly as they would in a live text session. Output
//! depends only on the script, the trace and the config, which makes a
//! simulated transcript reproducible byte for byte.

use serde::{Deserialize, Serialize};

use crate::dialogue::DialogueEngine;
use crate::listening::{synthetic_frames, FRAME_MS};
use crate::session::{ClientEvent, Session, SessionConfig, SessionError};
use crate::transcript::{SessionStatus, SessionTranscript, TranscriptEvent};
use crate::utterance::AsrStatus;

/// Time between the end of a system utterance and the participant's reply.
pub const RESPONSE_GAP_MS: u64 = 800;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceTurn {
    #[serde(default)]
    pub text: String,
    /// Speaking (or typing) time; 0 for a silent turn.
    #[serde(default)]
    pub duration_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asr_status: Option<AsrStatus>,
}

impl TraceTurn {
    pub fn said(text: impl Into<String>, duration_s: f64) -> Self {
        Self {
            text: text.into(),
            duration_s,
            asr_status: None,
        }
    }

    pub fn silent() -> Self {
        Self {
            text: String::new(),
            duration_s: 0.0,
            asr_status: Some(AsrStatus::Silence),
        }
    }

    fn status(&self) -> AsrStatus {
        self.asr_status.unwrap_or(if !self.text.trim().is_empty() {
            AsrStatus::Ok
        } else if self.duration_s > 0.0 {
            AsrStatus::EmptyWithVoice
        } else {
            AsrStatus::Silence
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    /// Topic to open with; the script's first topic when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_topic: Option<String>,
    pub turns: Vec<TraceTurn>,
}

impl TraceFile {
    /// Check the trace is playable: spoken turns need a positive duration.
    pub fn validate(&self) -> Result<(), String> {
        for (i, turn) in self.turns.iter().enumerate() {
            if !turn.duration_s.is_finite() || turn.duration_s < 0.0 {
                return Err(format!("turn {}: bad duration {}", i + 1, turn.duration_s));
            }
            if turn.status() == AsrStatus::Ok && turn.duration_s <= 0.0 {
                return Err(format!("turn {}: spoken turn needs duration_s > 0", i + 1));
            }
        }
        Ok(())
    }
}

/// The participant side of a recorded transcript, as a trace.
pub fn trace_from_transcript(transcript: &SessionTranscript) -> TraceFile {
    let first_asked = transcript.system_actions().next().map(|a| a.topic_id.clone());
    TraceFile {
        start_topic: first_asked,
        turns: transcript
            .user_turns()
            .map(|(_, u)| TraceTurn {
                text: u.text.clone(),
                duration_s: u.duration_s,
                asr_status: Some(u.asr_status),
            })
            .collect(),
    }
}

/// Run `trace` against a fresh session. Turns left over once the interview
/// has closed are ignored; a trace that runs out early leaves the session
/// incomplete. `on_event` sees every event as it is emitted.
pub fn simulate(
    engine: DialogueEngine,
    config: SessionConfig,
    transcript: SessionTranscript,
    trace: &TraceFile,
    mut on_event: impl FnMut(&TranscriptEvent),
) -> Result<SessionTranscript, SessionError> {
    let (mut session, opening) = match &trace.start_topic {
        Some(topic) => Session::start_at(engine, config, transcript, topic)?,
        None => Session::start(engine, config, transcript)?,
    };
    opening.iter().for_each(&mut on_event);
    for turn in &trace.turns {
        if session.is_finished() {
            break;
        }
        let start = session.speaking_until().max(session.last_event_time());
        let events = match turn.status() {
            AsrStatus::Silence => {
                let timeout_ms = (session.state().fluency.turn_timeout_s * 1000.0).round() as u64;
                session.inject_silence(start + timeout_ms)?
            }
            AsrStatus::EmptyWithVoice => {
                let end = start + RESPONSE_GAP_MS + (turn.duration_s * 1000.0).round() as u64;
                session.handle(
                    ClientEvent::UserText {
                        text: String::new(),
                        duration_s: turn.duration_s.max(0.001),
                        word_count: Some(0),
                    },
                    end,
                )?
            }
            AsrStatus::Ok => {
                let begin = start + RESPONSE_GAP_MS;
                let mut events = session.handle(ClientEvent::VoiceActivity { active: true }, begin)?;
                let frames = synthetic_frames(&turn.text, turn.duration_s, begin);
                let end = frames.last().map_or(begin, |f| f.t + FRAME_MS);
                for frame in frames {
                    events.extend(session.handle(ClientEvent::ProsodyFrame(frame), frame.t)?);
                }
                events.extend(session.handle(
                    ClientEvent::UserText {
                        text: turn.text.clone(),
                        duration_s: turn.duration_s,
                        word_count: None,
                    },
                    end,
                )?);
                events
            }
        };
        events.iter().for_each(&mut on_event);
    }
    if !session.is_finished() {
        let end = session.speaking_until().max(session.last_event_time());
        session.expire(end)?;
    }
    let transcript = session.transcript().clone();
    debug_assert_ne!(transcript.status, SessionStatus::Active);
    Ok(transcript)
}
