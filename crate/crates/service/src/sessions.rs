//! Live sessions: one mutex-guarded core session each, plus a timer task
//! for silence injection and idle expiry.
//!
//! Every event a session emits is appended to its transcript under the
//! session lock, so transcript order is delivery order. Stream consumers
//! are woken through a watch channel and read new events from the
//! transcript, which keeps delivery gap-free however events interleave.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex as StdMutex};
use std::time::{Duration, Instant};

use interviewer_core::followup::FollowupMode;
use interviewer_core::transcript::{AgentProfile, SessionStatus, TranscriptStore};
use interviewer_core::{
    ClientEvent, DialogueEngine, InterviewScript, Session, SessionConfig, SessionError, SessionTranscript,
    TranscriptEvent,
};
use tokio::sync::{watch, Mutex};

use crate::config::TimingConfig;

/// What stream consumers watch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progress {
    pub last_seq: u64,
    pub finished: bool,
}

struct Live {
    session: Session,
    last_activity: Instant,
    auto_silences: u32,
}

pub struct SessionSlot {
    pub session_id: String,
    pub script: Arc<InterviewScript>,
    live: Mutex<Live>,
    progress: watch::Sender<Progress>,
    connected: AtomicBool,
    epoch: Instant,
    timing: TimingConfig,
}

impl SessionSlot {
    /// Session time in ms.
    fn now(&self) -> u64 {
        (self.epoch.elapsed().as_secs_f64() * 1000.0 * self.timing.clock_rate) as u64
    }

    fn publish(&self, live: &Live, emitted: &[TranscriptEvent]) {
        for e in emitted {
            tracing::info!(session = %self.session_id, seq = e.seq, t = e.t, kind = e.body.kind_name(), "event");
        }
        let transcript = live.session.transcript();
        self.progress.send_replace(Progress {
            last_seq: transcript.events.last().map_or(0, |e| e.seq),
            finished: transcript.is_finalized(),
        });
    }

    pub fn subscribe(&self) -> watch::Receiver<Progress> {
        self.progress.subscribe()
    }

    /// Claim the single stream connection.
    pub fn connect(&self) -> bool {
        !self.connected.swap(true, Ordering::SeqCst)
    }

    pub fn disconnect(&self) {
        self.connected.store(false, Ordering::SeqCst);
    }

    /// Events with seq above `after`, and the session status.
    pub async fn events_after(&self, after: u64) -> (Vec<TranscriptEvent>, SessionStatus) {
        let live = self.live.lock().await;
        let t = live.session.transcript();
        (t.events.iter().filter(|e| e.seq > after).cloned().collect(), t.status)
    }

    pub async fn transcript(&self) -> SessionTranscript {
        self.live.lock().await.session.transcript().clone()
    }

    /// Apply one participant event; returns what it caused.
    pub async fn apply(&self, event: ClientEvent) -> Result<Vec<TranscriptEvent>, SessionError> {
        let mut live = self.live.lock().await;
        live.last_activity = Instant::now();
        match event {
            ClientEvent::UserText {
                text,
                duration_s,
                word_count,
            } => {
                let utterance = interviewer_core::session::utterance_from_text(text, duration_s, word_count)?;
                live.auto_silences = 0;
                let now = self.now();
                let (mut out, pending) = live.session.begin_user_turn(utterance, now)?;
                self.publish(&live, &out);
                let engine = live.session.engine().clone();
                drop(live);

                // the reply may need a model call; cover a slow one with a filler
                let started = Instant::now();
                let budget = Duration::from_millis(self.script.filler_latency_budget_ms + 1);
                let mut task = tokio::task::spawn_blocking(move || pending.resolve(&engine));
                let mut filler_sent = false;
                let turn = loop {
                    tokio::select! {
                        result = &mut task => break result.expect("reply task panicked"),
                        _ = tokio::time::sleep(budget), if !filler_sent => {
                            filler_sent = true;
                            let mut live = self.live.lock().await;
                            let now = self.now();
                            let filler = live.session.emit_filler(started.elapsed(), now)?;
                            self.publish(&live, &filler);
                            out.extend(filler);
                        }
                    }
                };
                let mut live = self.live.lock().await;
                let now = self.now();
                let emitted = match turn {
                    Ok(turn) => live.session.complete_turn(turn, now)?,
                    Err(e) => {
                        // the turn can never be answered; end the session rather than hang it
                        live.session.expire(now)?;
                        self.publish(&live, &[]);
                        return Err(e.into());
                    }
                };
                self.publish(&live, &emitted);
                out.extend(emitted);
                Ok(out)
            }
            other => {
                if matches!(other, ClientEvent::VoiceActivity { active: true }) {
                    live.auto_silences = 0;
                }
                let emitted = live.session.handle(other, self.now())?;
                self.publish(&live, &emitted);
                Ok(emitted)
            }
        }
    }

    /// One timer check. Returns false once the session is over.
    async fn tick(&self) -> bool {
        let mut live = self.live.lock().await;
        if live.session.is_finished() {
            return false;
        }
        let now = self.now();
        if live.last_activity.elapsed().as_secs_f64() >= self.timing.idle_expiry_s {
            tracing::info!(session = %self.session_id, "idle expiry");
            if let Err(e) = live.session.expire(now) {
                tracing::error!(session = %self.session_id, error = %e, "expiry failed");
            }
            self.publish(&live, &[]);
            return false;
        }
        let s = &live.session;
        if s.awaiting_answer() && !s.voice_active() && live.auto_silences < self.timing.max_auto_silences {
            let timeout_ms = (s.state().fluency.turn_timeout_s * 1000.0).round() as u64;
            let idle_since = s.speaking_until().max(s.last_event_time());
            if now >= idle_since + timeout_ms {
                match live.session.inject_silence(now) {
                    Ok(emitted) => {
                        live.auto_silences += 1;
                        self.publish(&live, &emitted);
                    }
                    Err(e) => tracing::error!(session = %self.session_id, error = %e, "silence injection failed"),
                }
            }
        }
        !live.session.is_finished()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CreateError {
    #[error("unknown script `{0}`")]
    UnknownScript(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Store(#[from] interviewer_core::transcript::StoreError),
}

pub struct SessionRegistry {
    scripts: HashMap<String, Arc<InterviewScript>>,
    store: TranscriptStore,
    followups: FollowupMode,
    timing: TimingConfig,
    live: StdMutex<HashMap<String, Arc<SessionSlot>>>,
}

impl SessionRegistry {
    pub fn new(
        scripts: HashMap<String, Arc<InterviewScript>>,
        store: TranscriptStore,
        followups: FollowupMode,
        timing: TimingConfig,
    ) -> Self {
        Self {
            scripts,
            store,
            followups,
            timing,
            live: StdMutex::new(HashMap::new()),
        }
    }

    pub fn store(&self) -> &TranscriptStore {
        &self.store
    }

    pub fn script(&self, id: &str) -> Option<&Arc<InterviewScript>> {
        self.scripts.get(id)
    }

    pub fn script_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.scripts.keys().cloned().collect();
        ids.sort();
        ids
    }

    pub fn get(&self, session_id: &str) -> Option<Arc<SessionSlot>> {
        self.live.lock().unwrap().get(session_id).cloned()
    }

    /// Start a session and its timer. Returns the opening events.
    pub fn create(
        self: &Arc<Self>,
        script_id: &str,
        profile: AgentProfile,
        date: Option<String>,
    ) -> Result<(Arc<SessionSlot>, Vec<TranscriptEvent>), CreateError> {
        let script = self
            .scripts
            .get(script_id)
            .cloned()
            .ok_or_else(|| CreateError::UnknownScript(script_id.to_string()))?;
        let session_id = format!("s_{}", uuid::Uuid::new_v4().simple());
        let writer = self
            .store
            .create(SessionTranscript::new(&session_id, script_id, profile, date))?;
        let engine = DialogueEngine::new(script.clone(), self.followups.clone());
        let (session, opening) = Session::start_recorded(engine, SessionConfig::default(), writer)?;
        let progress = Progress {
            last_seq: opening.last().map_or(0, |e| e.seq),
            finished: false,
        };
        let slot = Arc::new(SessionSlot {
            session_id: session_id.clone(),
            script,
            live: Mutex::new(Live {
                session,
                last_activity: Instant::now(),
                auto_silences: 0,
            }),
            progress: watch::Sender::new(progress),
            connected: AtomicBool::new(false),
            epoch: Instant::now(),
            timing: self.timing.clone(),
        });
        for e in &opening {
            tracing::info!(session = %session_id, seq = e.seq, t = e.t, kind = e.body.kind_name(), "event");
        }
        self.live.lock().unwrap().insert(session_id.clone(), slot.clone());

        let registry = Arc::downgrade(self);
        let timer_slot = slot.clone();
        let tick = Duration::from_millis(self.timing.tick_ms);
        tokio::spawn(async move {
            let mut interval = tokio::time::interval(tick);
            interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
            loop {
                interval.tick().await;
                if !timer_slot.tick().await {
                    break;
                }
            }
            if let Some(registry) = registry.upgrade() {
                registry.live.lock().unwrap().remove(&timer_slot.session_id);
            }
        });
        Ok((slot, opening))
    }

    /// Close every live session as incomplete (shutdown).
    pub async fn expire_all(&self) {
        let slots: Vec<_> = self.live.lock().unwrap().values().cloned().collect();
        for slot in slots {
            let mut live = slot.live.lock().await;
            let now = slot.now();
            if live.session.expire(now).is_ok() {
                slot.publish(&live, &[]);
            }
        }
    }
}
