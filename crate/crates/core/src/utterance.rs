use serde::{Deserialize, Serialize};

use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsrStatus {
    Ok,
    /// Voice activity was detected but recognition produced no text.
    EmptyWithVoice,
    /// No voice activity at all within the turn window.
    Silence,
}

/// Prosodic summary of a user turn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ProsodySummary {
    /// Mean fundamental frequency in Hz over voiced frames.
    pub f0_mean: f64,
    /// F0 slope over the final window, Hz/s.
    pub f0_slope_end: f64,
    pub power_mean: f64,
}

impl ProsodySummary {
    pub fn is_valid(&self) -> bool {
        self.f0_mean.is_finite()
            && self.f0_slope_end.is_finite()
            && self.power_mean.is_finite()
            && self.f0_mean >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserUtterance {
    pub text: String,
    pub word_count: usize,
    pub duration_s: f64,
    #[serde(default)]
    pub prosody: ProsodySummary,
    pub asr_status: AsrStatus,
}

impl UserUtterance {
    /// A recognized turn. The word count is derived from `text`.
    pub fn recognized(text: impl Into<String>, duration_s: f64) -> Self {
        let text = text.into();
        Self {
            word_count: text::word_count(&text),
            text,
            duration_s,
            prosody: ProsodySummary::default(),
            asr_status: AsrStatus::Ok,
        }
    }

    /// Voice was heard but nothing was recognized.
    pub fn unrecognized(duration_s: f64) -> Self {
        Self {
            text: String::new(),
            word_count: 0,
            duration_s,
            prosody: ProsodySummary::default(),
            asr_status: AsrStatus::EmptyWithVoice,
        }
    }

    pub fn silence() -> Self {
        Self {
            text: String::new(),
            word_count: 0,
            duration_s: 0.0,
            prosody: ProsodySummary::default(),
            asr_status: AsrStatus::Silence,
        }
    }

    pub fn with_prosody(mut self, prosody: ProsodySummary) -> Self {
        self.prosody = prosody;
        self
    }
}
