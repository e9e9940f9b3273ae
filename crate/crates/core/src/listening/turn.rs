use serde::{Deserialize, Serialize};

use super::ProsodyFrame;
use crate::fluency::FluencyProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnKind {
    Hold,
    YieldToSystem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnDecision {
    pub kind: TurnKind,
    pub silence_ms: u64,
}

/// Length of the unvoiced run at the end of `frames`.
pub fn trailing_silence_ms(frames: &[ProsodyFrame]) -> u64 {
    let Some(last) = frames.last() else {
        return 0;
    };
    if last.voiced {
        return 0;
    }
    let start = frames
        .iter()
        .rposition(|f| f.voiced)
        .map(|i| frames[i + 1].t)
        .unwrap_or(frames[0].t);
    last.t - start
}

/// Give the floor to the system once the user has been silent for the
/// profile's turn timeout.
pub fn decide_turn(silence_ms: u64, fluency: &FluencyProfile) -> TurnDecision {
    let timeout_ms = (fluency.turn_timeout_s * 1000.0).round() as u64;
    let kind = if silence_ms >= timeout_ms {
        TurnKind::YieldToSystem
    } else {
        TurnKind::Hold
    };
    TurnDecision { kind, silence_ms }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::script::FluencyConfig;
    use crate::utterance::UserUtterance;

    fn standard() -> FluencyProfile {
        FluencyProfile::initial(&FluencyConfig::default())
    }

    fn low() -> FluencyProfile {
        let c = FluencyConfig::default();
        crate::fluency::update_fluency(
            &FluencyProfile::initial(&c),
            &UserUtterance::recognized(vec!["w"; 30].join(" "), 24.0),
            &c,
        )
        .unwrap()
    }

    fn frames(voiced_ms: u64, silent_ms: u64) -> Vec<ProsodyFrame> {
        (0..(voiced_ms + silent_ms) / 10 + 1)
            .map(|i| ProsodyFrame {
                t: i * 10,
                voiced: i * 10 < voiced_ms,
                f0: 0.0,
                power: 0.0,
            })
            .collect()
    }

    #[test]
    fn examples() {
        assert_eq!(decide_turn(3100, &standard()).kind, TurnKind::YieldToSystem);
        assert_eq!(decide_turn(4000, &low()).kind, TurnKind::Hold);
        assert_eq!(decide_turn(6000, &low()).kind, TurnKind::YieldToSystem);
        let talking = frames(5000, 0);
        assert_eq!(trailing_silence_ms(&talking), 0);
        assert_eq!(decide_turn(trailing_silence_ms(&talking), &standard()).kind, TurnKind::Hold);
    }

    #[test]
    fn silence_measured_from_last_voiced_frame() {
        assert_eq!(trailing_silence_ms(&frames(1000, 3100)), 3100);
        assert_eq!(trailing_silence_ms(&frames(0, 500)), 500);
        assert_eq!(trailing_silence_ms(&[]), 0);
    }

    #[test]
    fn monotone_in_silence() {
        for profile in [standard(), low()] {
            let first_yield = (0..10_000u64)
                .step_by(50)
                .find(|&s| decide_turn(s, &profile).kind == TurnKind::YieldToSystem)
                .unwrap();
            assert!((first_yield..12_000)
                .step_by(7)
                .all(|s| decide_turn(s, &profile).kind == TurnKind::YieldToSystem));
        }
    }
}
