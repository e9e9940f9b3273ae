//! Listener behaviour: when to backchannel, which backchannel to produce, and
//! when the user's turn is over.
//!
//! Prediction and generation are separate. A [`BackchannelPredictor`] watches
//! the prosody stream and reports trigger times; [`choose_backchannel_form`]
//! then decides what to say and how to nod. The default predictor is a
//! prosody/silence heuristic; any model that speaks the [`ProsodyFrame`]
//! protocol can be plugged in instead.

mod backchannel;
mod synth;
mod turn;

use serde::{Deserialize, Serialize};

pub use backchannel::{
    choose_backchannel_form, BackchannelPlan, BackchannelPredictor, HeuristicConfig,
    HeuristicPredictor, Repertoire, StreamError,
};
pub use synth::{summarize_prosody, synthetic_frames, FRAME_MS};
pub use turn::{decide_turn, trailing_silence_ms, TurnDecision, TurnKind};

/// One pre-extracted prosody frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProsodyFrame {
    /// Milliseconds since session start.
    pub t: u64,
    pub voiced: bool,
    /// Hz, 0 when unvoiced.
    #[serde(default)]
    pub f0: f64,
    #[serde(default)]
    pub power: f64,
}
