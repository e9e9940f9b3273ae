//! Speaking-rate tracking and the slow-speaker adaptation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::script::FluencyConfig;
use crate::utterance::UserUtterance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proficiency {
    Low,
    Standard,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FluencyError {
    #[error("invalid measurement: {word_count} words over {duration_s} s")]
    InvalidMeasurement { word_count: usize, duration_s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluencyProfile {
    /// `None` until the first valid measurement.
    pub rolling_wpm: Option<f64>,
    pub proficiency: Proficiency,
    pub speech_rate_factor: f64,
    pub turn_timeout_s: f64,
}

impl FluencyProfile {
    pub fn initial(config: &FluencyConfig) -> Self {
        Self::classified(None, config)
    }

    fn classified(rolling_wpm: Option<f64>, config: &FluencyConfig) -> Self {
        let low = rolling_wpm.is_some_and(|wpm| wpm <= config.threshold_wpm);
        if low {
            Self {
                rolling_wpm,
                proficiency: Proficiency::Low,
                speech_rate_factor: config.low_rate_factor,
                turn_timeout_s: config.low_turn_timeout_s,
            }
        } else {
            Self {
                rolling_wpm,
                proficiency: Proficiency::Standard,
                speech_rate_factor: config.standard_rate_factor,
                turn_timeout_s: config.standard_turn_timeout_s,
            }
        }
    }

    pub fn is_low(&self) -> bool {
        self.proficiency == Proficiency::Low
    }
}

/// Words per minute for one turn. Computed as `words * 60 / seconds` so that
/// round inputs stay exact.
pub fn words_per_minute(word_count: usize, duration_s: f64) -> f64 {
    word_count as f64 * 60.0 / duration_s
}

/// Fold one user turn into the profile.
///
/// Turns without words leave the profile untouched. A turn with words but no
/// positive duration is rejected and the caller keeps the old profile.
pub fn update_fluency(
    profile: &FluencyProfile,
    utterance: &UserUtterance,
    config: &FluencyConfig,
) -> Result<FluencyProfile, FluencyError> {
    if utterance.word_count == 0 {
        return Ok(profile.clone());
    }
    if !(utterance.duration_s.is_finite() && utterance.duration_s > 0.0) {
        return Err(FluencyError::InvalidMeasurement {
            word_count: utterance.word_count,
            duration_s: utterance.duration_s,
        });
    }
    let wpm = words_per_minute(utterance.word_count, utterance.duration_s);
    let rolling = match profile.rolling_wpm {
        None => wpm,
        Some(prev) => config.smoothing_weight * wpm + (1.0 - config.smoothing_weight) * prev,
    };
    Ok(FluencyProfile::classified(Some(rolling), config))
}
