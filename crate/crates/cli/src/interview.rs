//! Terminal interviews: typed answers or a replayed trace.
//!
//! Typed answers are timed from the prompt to Enter and that time stands in
//! for speaking duration, so WPM here is a typing rate. An empty line is a
//! silent turn; end of input closes the session as incomplete.

use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use interviewer_core::followup::FollowupMode;
use interviewer_core::session::utterance_from_text;
use interviewer_core::simulate::{simulate, TraceFile};
use interviewer_core::transcript::{AgentProfile, SessionStatus};
use interviewer_core::{DialogueEngine, InterviewScript, Session, SessionConfig, SessionTranscript, TranscriptStore};

use crate::render::event_line;
use crate::CliError;

pub struct InterviewOptions {
    pub session_id: String,
    pub profile: AgentProfile,
    pub date: String,
    pub verbose: bool,
}

fn new_transcript(script: &InterviewScript, opts: &InterviewOptions) -> SessionTranscript {
    SessionTranscript::new(&opts.session_id, &script.id, opts.profile, Some(opts.date.clone()))
}

pub fn read_trace(path: &Path) -> Result<TraceFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let trace: TraceFile =
        serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    trace
        .validate()
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(trace)
}

/// Replay `trace`, print the exchange and store the transcript.
pub fn run_simulated(
    script: Arc<InterviewScript>,
    trace: &TraceFile,
    store: &TranscriptStore,
    opts: &InterviewOptions,
    out: &mut dyn Write,
) -> Result<SessionTranscript, CliError> {
    if store.exists(&opts.session_id) {
        return Err(CliError::data(format!("session {} already exists", opts.session_id)));
    }
    let engine = DialogueEngine::new(script.clone(), FollowupMode::Template);
    let mut write_err = None;
    let transcript = simulate(engine, SessionConfig::default(), new_transcript(&script, opts), trace, |e| {
        if let Some(line) = event_line(e, true, opts.verbose) {
            if let Err(err) = writeln!(out, "{line}") {
                write_err.get_or_insert(err);
            }
        }
    })
    .map_err(|e| CliError::data(e.to_string()))?;
    if let Some(e) = write_err {
        return Err(CliError::runtime(e.to_string()));
    }
    let path = store.save(&transcript).map_err(CliError::from_store)?;
    writeln!(out, "{}", summary(&transcript, &path.display().to_string())).map_err(CliError::io)?;
    Ok(transcript)
}

fn summary(t: &SessionTranscript, location: &str) -> String {
    let status = match t.status {
        SessionStatus::Complete => "complete",
        SessionStatus::Incomplete => "incomplete",
        SessionStatus::Active => "active",
    };
    format!("session {} {status}; transcript: {location}", t.session_id)
}

/// Session time that never runs backwards, even after a silent turn
/// advanced it past the wall clock.
struct Clock {
    start: Instant,
    floor: u64,
}

impl Clock {
    fn now(&mut self) -> u64 {
        let wall = self.start.elapsed().as_millis() as u64;
        self.floor = self.floor.max(wall);
        self.floor
    }

    fn advance_to(&mut self, t: u64) -> u64 {
        self.floor = self.floor.max(t);
        self.now()
    }
}

/// Interview a person at the terminal.
pub fn run_interactive(
    script: Arc<InterviewScript>,
    store: &TranscriptStore,
    opts: &InterviewOptions,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> Result<SessionTranscript, CliError> {
    let writer = store
        .create(new_transcript(&script, opts))
        .map_err(CliError::from_store)?;
    let engine = DialogueEngine::new(script, FollowupMode::Template);
    let (mut session, opening) =
        Session::start_recorded(engine, SessionConfig::default(), writer).map_err(|e| CliError::runtime(e.to_string()))?;
    let mut clock = Clock {
        start: Instant::now(),
        floor: 0,
    };
    print_events(out, &opening, opts.verbose)?;

    while !session.is_finished() {
        write!(out, "> ").and_then(|_| out.flush()).map_err(CliError::io)?;
        let asked = Instant::now();
        let mut line = String::new();
        let read = input.read_line(&mut line).map_err(CliError::io)?;
        if read == 0 {
            let now = clock.now();
            session.expire(now).map_err(|e| CliError::runtime(e.to_string()))?;
            writeln!(out).map_err(CliError::io)?;
            break;
        }
        let typed = asked.elapsed().as_secs_f64();
        let text = line.trim();
        let events = if text.is_empty() {
            let timeout_ms = (session.state().fluency.turn_timeout_s * 1000.0).round() as u64;
            let due = session.speaking_until().max(session.last_event_time()) + timeout_ms;
            let now = clock.advance_to(due);
            session.inject_silence(now)
        } else {
            let now = clock.now();
            utterance_from_text(text.to_string(), typed.max(0.001), None).and_then(|u| session.user_turn(u, now))
        }
        .map_err(|e| CliError::runtime(e.to_string()))?;
        print_events(out, &events, opts.verbose)?;
    }
    let transcript = session.transcript().clone();
    let location = store.path_for(&transcript.session_id).display().to_string();
    writeln!(out, "{}", summary(&transcript, &location)).map_err(CliError::io)?;
    Ok(transcript)
}

fn print_events(out: &mut dyn Write, events: &[interviewer_core::TranscriptEvent], verbose: bool) -> Result<(), CliError> {
    for e in events {
        if let Some(line) = event_line(e, false, verbose) {
            writeln!(out, "{line}").map_err(CliError::io)?;
        }
    }
    Ok(())
}
