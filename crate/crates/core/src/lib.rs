//! Dialogue management for a structured, human-like interview agent.
//!
//! The crate is a pure decision core plus transcript storage:
//!
//! - [`script`]: the interview script (topic graph, lexicons, response banks)
//! - [`understanding`], [`repair`], [`fluency`], [`followup`]: per-turn analysis
//! - [`dialogue`]: the interview state machine
//! - [`listening`]: backchannel prediction/generation and turn-taking
//! - [`transcript`]: session event logs and their on-disk store
//! - [`session`]: one live interview tying the above together
//! - [`simulate`]: virtual-time sessions driven by a trace of user turns
//! - [`llm`]: the language-model client interface

pub mod dialogue;
pub mod fluency;
pub mod followup;
pub mod gesture;
pub mod listening;
pub mod llm;
pub mod repair;
pub mod script;
pub mod session;
pub mod simulate;
pub mod text;
pub mod transcript;
pub mod understanding;
pub mod utterance;

pub use dialogue::{ActionKind, DialogueEngine, DialogueState, Phase, SystemAction, Transition};
pub use script::InterviewScript;
pub use session::{ClientEvent, Session, SessionConfig, SessionError};
pub use transcript::{SessionTranscript, TranscriptEvent, TranscriptStore};
pub use utterance::{AsrStatus, UserUtterance};
