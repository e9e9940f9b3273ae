//! Terminal rendering of transcript events.

use interviewer_core::gesture::{GestureTag, NodPattern};
use interviewer_core::transcript::EventBody;
use interviewer_core::TranscriptEvent;

fn nod(p: &NodPattern) -> String {
    let times = if p.frequency.fract() == 0.0 {
        format!("{}", p.frequency as i64)
    } else {
        format!("{}", p.frequency)
    };
    format!("[nod x{times} {}]", p.speed.as_str())
}

pub fn gesture_cue(g: &GestureTag) -> String {
    match g {
        GestureTag::OpenPalm => "[open palm]".into(),
        GestureTag::LeanBack => "[lean back]".into(),
        GestureTag::Bow => "[bow]".into(),
        GestureTag::Nod(p) => nod(p),
    }
}

/// One display line for `event`, or `None` for bookkeeping events.
/// User turns are shown only when `echo_user` is set (replays).
pub fn event_line(event: &TranscriptEvent, echo_user: bool, verbose: bool) -> Option<String> {
    match &event.body {
        // the action's gesture arrives as its own event
        EventBody::SystemUtterance(a) => Some(format!("robot: {}", a.text)),
        EventBody::UserUtterance(u) if echo_user => Some(if u.text.is_empty() {
            "you: (silence)".to_string()
        } else {
            format!("you: {}", u.text)
        }),
        EventBody::Backchannel(b) => Some(match &b.nod {
            Some(p) => format!("[{}] {}", b.token, nod(p)),
            None => format!("[{}]", b.token),
        }),
        EventBody::Gesture(g) => Some(gesture_cue(g)),
        EventBody::Repair(r) if verbose => Some(format!("  (repair: {})", serde_json::to_string(r).unwrap_or_default())),
        EventBody::StateChange(s) if verbose => Some(format!("  (topic: {})", s.topic_id)),
        _ => None,
    }
}
