//! One live interview: dialogue engine, listener and transcript in lockstep.
//!
//! All methods take the current session time explicitly (ms since start), so
//! the same code drives wall-clock sessions in the service and virtual-time
//! replays in the simulator.
//!
//! A user turn is applied in two steps, [`Session::begin_user_turn`] and
//! [`Session::complete_turn`], so a caller can compute the reply elsewhere
//! and cover a slow computation with [`Session::emit_filler`].

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogue::{
    ActionKind, DialogueEngine, DialogueError, DialogueState, Phase, SystemAction, Transition, Turn,
};
use crate::listening::{
    choose_backchannel_form, summarize_prosody, BackchannelPlan, BackchannelPredictor,
    HeuristicConfig, HeuristicPredictor, ProsodyFrame, Repertoire, StreamError,
};
use crate::repair::InterimFillers;
use crate::script::InterviewScript;
use crate::text;
use crate::transcript::{
    EventBody, SessionStatus, SessionTranscript, SessionWriter, StateChange, StoreError,
    TranscriptEvent, UserTurnRecord,
};
use crate::utterance::UserUtterance;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("session is closed")]
    Closed,
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
    #[error("prosody stream error: {0}")]
    Stream(#[from] StreamError),
    #[error("invalid user turn: {0}")]
    InvalidTurn(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub listening: HeuristicConfig,
    pub repertoire: Repertoire,
    /// Nominal system speaking rate used to estimate utterance length.
    pub speaking_wpm: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            listening: HeuristicConfig::default(),
            repertoire: Repertoire::default(),
            speaking_wpm: 160.0,
        }
    }
}

/// Input from the participant side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientEvent {
    UserText {
        text: String,
        duration_s: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        word_count: Option<usize>,
    },
    ProsodyFrame(ProsodyFrame),
    VoiceActivity { active: bool },
}

enum Recorder {
    Memory(SessionTranscript),
    Store(SessionWriter),
}

impl Recorder {
    fn transcript(&self) -> &SessionTranscript {
        match self {
            Recorder::Memory(t) => t,
            Recorder::Store(w) => w.transcript(),
        }
    }

    fn append(&mut self, event: TranscriptEvent) -> Result<(), SessionError> {
        match self {
            Recorder::Memory(t) => t
                .append(event)
                .map_err(|e| SessionError::Store(StoreError::Ordering(e))),
            Recorder::Store(w) => Ok(w.append(event)?),
        }
    }

    fn finalize(&mut self, status: SessionStatus, ended_at: u64) -> Result<(), SessionError> {
        match self {
            Recorder::Memory(t) => {
                t.status = status;
                t.ended_at = Some(ended_at);
            }
            Recorder::Store(w) => {
                w.finalize(status, ended_at)?;
            }
        }
        Ok(())
    }
}

/// A user turn recorded but not yet answered.
#[derive(Debug, Clone)]
pub struct PendingTurn {
    pub state: DialogueState,
    pub utterance: UserUtterance,
}

impl PendingTurn {
    pub fn resolve(&self, engine: &DialogueEngine) -> Result<Turn, DialogueError> {
        engine.advance(&self.state, &self.utterance)
    }
}

pub struct Session {
    engine: DialogueEngine,
    config: SessionConfig,
    state: DialogueState,
    recorder: Recorder,
    predictor: Box<dyn BackchannelPredictor>,
    plans: Vec<BackchannelPlan>,
    turn_frames: Vec<ProsodyFrame>,
    fillers: InterimFillers,
    speaking_until: u64,
    voice_active: bool,
    pending: bool,
    last_t: u64,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("session_id", &self.transcript().session_id)
            .field("phase", &self.state.phase)
            .field("topic", &self.state.current_topic)
            .finish_non_exhaustive()
    }
}

impl Session {
    /// Start an in-memory session.
    pub fn start(
        engine: DialogueEngine,
        config: SessionConfig,
        transcript: SessionTranscript,
    ) -> Result<(Self, Vec<TranscriptEvent>), SessionError> {
        Self::start_with(engine, config, Recorder::Memory(transcript), None)
    }

    /// Start an in-memory session at a topic other than the first.
    pub fn start_at(
        engine: DialogueEngine,
        config: SessionConfig,
        transcript: SessionTranscript,
        topic_id: &str,
    ) -> Result<(Self, Vec<TranscriptEvent>), SessionError> {
        Self::start_with(engine, config, Recorder::Memory(transcript), Some(topic_id))
    }

    /// Start a session whose events are written ahead to a store.
    pub fn start_recorded(
        engine: DialogueEngine,
        config: SessionConfig,
        writer: SessionWriter,
    ) -> Result<(Self, Vec<TranscriptEvent>), SessionError> {
        Self::start_with(engine, config, Recorder::Store(writer), None)
    }

    fn start_with(
        engine: DialogueEngine,
        config: SessionConfig,
        recorder: Recorder,
        topic_id: Option<&str>,
    ) -> Result<(Self, Vec<TranscriptEvent>), SessionError> {
        let (state, action) = match topic_id {
            Some(id) => engine.start_at(id)?,
            None => engine.start(),
        };
        let predictor = Box::new(HeuristicPredictor::new(config.listening.clone()));
        let mut session = Self {
            engine,
            config,
            state,
            recorder,
            predictor,
            plans: Vec::new(),
            turn_frames: Vec::new(),
            fillers: InterimFillers::new(),
            speaking_until: 0,
            voice_active: false,
            pending: false,
            last_t: 0,
        };
        let mut out = Vec::new();
        session.say(action, 0, &mut out)?;
        Ok((session, out))
    }

    /// Swap in another backchannel predictor (e.g. a model adapter).
    pub fn set_predictor(&mut self, predictor: Box<dyn BackchannelPredictor>) {
        self.predictor = predictor;
    }

    pub fn engine(&self) -> &DialogueEngine {
        &self.engine
    }

    pub fn script(&self) -> &Arc<InterviewScript> {
        self.engine.script()
    }

    pub fn state(&self) -> &DialogueState {
        &self.state
    }

    pub fn transcript(&self) -> &SessionTranscript {
        self.recorder.transcript()
    }

    pub fn is_finished(&self) -> bool {
        self.transcript().is_finalized()
    }

    /// End of the system's current utterance, ms since start.
    pub fn speaking_until(&self) -> u64 {
        self.speaking_until
    }

    pub fn voice_active(&self) -> bool {
        self.voice_active
    }

    pub fn last_event_time(&self) -> u64 {
        self.last_t
    }

    pub fn awaiting_answer(&self) -> bool {
        self.state.phase == Phase::AwaitingAnswer && !self.pending && !self.is_finished()
    }

    /// Estimated time to speak `text` at `rate_factor`.
    pub fn speech_duration_ms(&self, text: &str, rate_factor: f64) -> u64 {
        let words = text::word_count(text) as f64;
        let wpm = self.config.speaking_wpm * rate_factor;
        if words == 0.0 || wpm <= 0.0 {
            return 0;
        }
        (words / wpm * 60_000.0).round() as u64
    }

    fn ensure_open(&self) -> Result<(), SessionError> {
        if self.is_finished() || self.state.phase == Phase::Done {
            Err(SessionError::Closed)
        } else {
            Ok(())
        }
    }

    fn emit(&mut self, body: EventBody, t: u64, out: &mut Vec<TranscriptEvent>) -> Result<(), SessionError> {
        let t = t.max(self.last_t);
        let event = TranscriptEvent {
            seq: self.transcript().next_seq(),
            t,
            body,
        };
        self.recorder.append(event.clone())?;
        self.last_t = t;
        out.push(event);
        Ok(())
    }

    fn say(&mut self, action: SystemAction, now: u64, out: &mut Vec<TranscriptEvent>) -> Result<(), SessionError> {
        let start = now.max(self.last_t);
        let gesture = action.gesture;
        let duration = self.speech_duration_ms(&action.text, action.speech_rate_factor);
        self.emit(EventBody::SystemUtterance(action), start, out)?;
        if let Some(tag) = gesture {
            self.emit(EventBody::Gesture(tag), start, out)?;
        }
        self.speaking_until = self.speaking_until.max(start + duration);
        Ok(())
    }

    /// Apply one participant event.
    pub fn handle(&mut self, event: ClientEvent, now: u64) -> Result<Vec<TranscriptEvent>, SessionError> {
        match event {
            ClientEvent::UserText {
                text,
                duration_s,
                word_count,
            } => {
                let utterance = utterance_from_text(text, duration_s, word_count)?;
                self.user_turn(utterance, now)
            }
            ClientEvent::ProsodyFrame(frame) => self.prosody_frame(frame),
            ClientEvent::VoiceActivity { active } => {
                self.ensure_open()?;
                self.voice_active = active;
                if active {
                    self.predictor.reset();
                    self.turn_frames.clear();
                }
                Ok(Vec::new())
            }
        }
    }

    /// Record a user turn and answer it immediately.
    pub fn user_turn(&mut self, utterance: UserUtterance, now: u64) -> Result<Vec<TranscriptEvent>, SessionError> {
        let (mut out, pending) = self.begin_user_turn(utterance, now)?;
        let turn = pending.resolve(&self.engine)?;
        out.extend(self.complete_turn(turn, now)?);
        Ok(out)
    }

    /// The participant said nothing for a whole turn window.
    pub fn inject_silence(&mut self, now: u64) -> Result<Vec<TranscriptEvent>, SessionError> {
        self.user_turn(UserUtterance::silence(), now)
    }

    /// Log the user's turn and return what is needed to compute the reply.
    pub fn begin_user_turn(
        &mut self,
        mut utterance: UserUtterance,
        now: u64,
    ) -> Result<(Vec<TranscriptEvent>, PendingTurn), SessionError> {
        self.ensure_open()?;
        if self.pending {
            return Err(SessionError::InvalidTurn("previous turn still being answered".into()));
        }
        if self.state.phase != Phase::AwaitingAnswer {
            return Err(SessionError::Closed);
        }
        if !self.turn_frames.is_empty() {
            utterance.prosody = summarize_prosody(&self.turn_frames);
        }
        let record = UserTurnRecord {
            text: utterance.text.clone(),
            word_count: utterance.word_count,
            duration_s: utterance.duration_s,
            asr_status: utterance.asr_status,
            prosody: (!self.turn_frames.is_empty()).then_some(utterance.prosody),
            topic_id: self.state.current_topic.clone(),
        };
        self.turn_frames.clear();
        self.predictor.reset();
        self.voice_active = false;

        let mut out = Vec::new();
        self.emit(EventBody::UserUtterance(record), now, &mut out)?;
        self.pending = true;
        Ok((
            out,
            PendingTurn {
                state: self.state.clone(),
                utterance,
            },
        ))
    }

    /// Speak a filler while the reply is still being prepared, if the
    /// elapsed time is over budget.
    pub fn emit_filler(&mut self, elapsed: Duration, now: u64) -> Result<Vec<TranscriptEvent>, SessionError> {
        let mut out = Vec::new();
        if let Some(text) = self.fillers.interim_filler(elapsed, self.engine.script()) {
            let action = SystemAction {
                kind: ActionKind::Filler,
                text,
                gesture: None,
                speech_rate_factor: self.state.fluency.speech_rate_factor,
                topic_id: self.state.current_topic.clone(),
            };
            self.say(action, now, &mut out)?;
        }
        Ok(out)
    }

    /// Apply a computed reply to the session.
    pub fn complete_turn(&mut self, turn: Turn, now: u64) -> Result<Vec<TranscriptEvent>, SessionError> {
        if !self.pending {
            return Err(SessionError::InvalidTurn("no user turn awaiting a reply".into()));
        }
        self.pending = false;
        let mut out = Vec::new();
        if !turn.repair.is_none() {
            self.emit(EventBody::Repair(turn.repair.clone()), now, &mut out)?;
        }
        self.state = turn.state;
        let t = now.max(self.last_t);
        self.say(turn.action, t, &mut out)?;
        match &turn.transition {
            Transition::Advance { .. } | Transition::ForcedAdvance { .. } | Transition::Close { .. } => {
                let change = StateChange {
                    topic_id: self.state.current_topic.clone(),
                    phase: self.state.phase,
                    transition: Some(turn.transition.clone()),
                };
                self.emit(EventBody::StateChange(change), t, &mut out)?;
            }
            Transition::Repair { .. } | Transition::FollowUp => {}
        }
        if self.state.phase == Phase::Closing {
            self.state = self.engine.finish(&self.state);
            let end = self.speaking_until.max(self.last_t);
            let change = StateChange {
                topic_id: self.state.current_topic.clone(),
                phase: self.state.phase,
                transition: None,
            };
            self.emit(EventBody::StateChange(change), end, &mut out)?;
            self.recorder.finalize(SessionStatus::Complete, end)?;
        }
        Ok(out)
    }

    fn prosody_frame(&mut self, frame: ProsodyFrame) -> Result<Vec<TranscriptEvent>, SessionError> {
        self.ensure_open()?;
        let mut out = Vec::new();
        if self.state.phase != Phase::AwaitingAnswer || self.pending {
            return Ok(out);
        }
        if frame.voiced {
            self.voice_active = true;
        }
        self.turn_frames.push(frame);
        let trigger = match self.predictor.observe(&frame) {
            Ok(trigger) => trigger,
            Err(err) => {
                self.turn_frames.clear();
                return Err(err.into());
            }
        };
        if let Some(at) = trigger {
            // never talk over our own utterance
            if at >= self.speaking_until {
                let plan = choose_backchannel_form(&self.plans, &self.config.repertoire, at);
                self.plans.push(plan.clone());
                self.emit(EventBody::Backchannel(plan), at, &mut out)?;
            }
        }
        Ok(out)
    }

    /// Close a session that never reached its closing.
    pub fn expire(&mut self, now: u64) -> Result<(), SessionError> {
        if self.is_finished() {
            return Ok(());
        }
        self.recorder
            .finalize(SessionStatus::Incomplete, now.max(self.last_t))
    }
}

/// Build an utterance from a text turn. Empty text with a duration means
/// voice was heard but not recognized; empty text without one is silence.
pub fn utterance_from_text(
    text: String,
    duration_s: f64,
    word_count: Option<usize>,
) -> Result<UserUtterance, SessionError> {
    if !duration_s.is_finite() || duration_s < 0.0 {
        return Err(SessionError::InvalidTurn(format!("bad duration {duration_s}")));
    }
    let counted = text::word_count(&text);
    if let Some(claimed) = word_count {
        if claimed != counted {
            tracing::debug!(claimed, counted, "client word count differs; using server count");
        }
    }
    if counted == 0 {
        return Ok(if duration_s > 0.0 {
            UserUtterance::unrecognized(duration_s)
        } else {
            UserUtterance::silence()
        });
    }
    if duration_s == 0.0 {
        return Err(SessionError::InvalidTurn("spoken turn with zero duration".into()));
    }
    Ok(UserUtterance::recognized(text, duration_s))
}

/// Re-run a transcript's user turns through a template-mode engine and
/// return the system actions it produces (fillers excluded).
pub fn replay_actions(
    transcript: &SessionTranscript,
    engine: &DialogueEngine,
) -> Result<Vec<SystemAction>, DialogueError> {
    let (mut state, opening) = match transcript.system_actions().next() {
        Some(first) => engine.start_at(&first.topic_id)?,
        None => engine.start(),
    };
    let mut actions = vec![opening];
    for (_, record) in transcript.user_turns() {
        if state.phase != Phase::AwaitingAnswer {
            break;
        }
        let utterance = UserUtterance {
            text: record.text.clone(),
            word_count: record.word_count,
            duration_s: record.duration_s,
            prosody: record.prosody.unwrap_or_default(),
            asr_status: record.asr_status,
        };
        let turn = engine.advance(&state, &utterance)?;
        state = engine.finish(&turn.state);
        actions.push(turn.action);
    }
    Ok(actions)
}

/// Recorded system actions, fillers excluded.
pub fn recorded_actions(transcript: &SessionTranscript) -> Vec<SystemAction> {
    transcript
        .system_actions()
        .filter(|a| a.kind != ActionKind::Filler)
        .cloned()
        .collect()
}
