//! Prosody for text-only input.
//!
//! Terminal and browser sessions have no audio, so a plausible frame track is
//! synthesized from the typed answer: one voiced phrase per clause, falling
//! pitch at each phrase end, and a short pause between clauses.

use super::backchannel::least_squares_slope;
use super::ProsodyFrame;
use crate::utterance::ProsodySummary;

pub const FRAME_MS: u64 = 20;
const CLAUSE_PAUSE_MS: u64 = 500;
const SLOPE_WINDOW_MS: u64 = 300;

/// Frame track for `text` spoken over `duration_s`, starting at `start_t`.
/// The track ends with a trailing pause so the final clause can be acknowledged.
pub fn synthetic_frames(text: &str, duration_s: f64, start_t: u64) -> Vec<ProsodyFrame> {
    let clauses: Vec<usize> = text
        .split([',', '.', ';', ':', '?', '!'])
        .map(crate::text::word_count)
        .filter(|&n| n > 0)
        .collect();
    let total_words: usize = clauses.iter().sum();
    if total_words == 0 || !(duration_s.is_finite() && duration_s > 0.0) {
        return Vec::new();
    }
    let duration_ms = (duration_s * 1000.0).round() as u64;
    let gaps = clauses.len() as u64 - 1;
    let (clauses, voiced_total) = if duration_ms > gaps * CLAUSE_PAUSE_MS + FRAME_MS * clauses.len() as u64 {
        (clauses, duration_ms - gaps * CLAUSE_PAUSE_MS)
    } else {
        (vec![total_words], duration_ms)
    };

    let mut frames = Vec::new();
    let mut t = start_t;
    for words in &clauses {
        let span = (voiced_total * *words as u64 / total_words as u64).max(FRAME_MS);
        let n = (span / FRAME_MS).max(1);
        for i in 0..n {
            let frac = i as f64 / n as f64;
            frames.push(ProsodyFrame {
                t,
                voiced: true,
                f0: 210.0 - 40.0 * frac,
                power: 62.0 - 4.0 * frac,
            });
            t += FRAME_MS;
        }
        for _ in 0..=(CLAUSE_PAUSE_MS / FRAME_MS) {
            frames.push(ProsodyFrame {
                t,
                voiced: false,
                f0: 0.0,
                power: 30.0,
            });
            t += FRAME_MS;
        }
    }
    frames
}

/// Summary statistics for a frame track.
pub fn summarize_prosody(frames: &[ProsodyFrame]) -> ProsodySummary {
    let voiced: Vec<&ProsodyFrame> = frames.iter().filter(|f| f.voiced).collect();
    let f0_mean = if voiced.is_empty() {
        0.0
    } else {
        voiced.iter().map(|f| f.f0).sum::<f64>() / voiced.len() as f64
    };
    let f0_slope_end = match voiced.last() {
        None => 0.0,
        Some(last) => least_squares_slope(
            voiced
                .iter()
                .filter(|f| f.t + SLOPE_WINDOW_MS >= last.t)
                .map(|f| (f.t, f.f0))
                .collect::<Vec<_>>()
                .into_iter(),
        ),
    };
    let power_mean = if frames.is_empty() {
        0.0
    } else {
        frames.iter().map(|f| f.power).sum::<f64>() / frames.len() as f64
    };
    ProsodySummary {
        f0_mean,
        f0_slope_end,
        power_mean,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::listening::{BackchannelPredictor, HeuristicPredictor};

    #[test]
    fn frames_are_ordered_and_dense() {
        let frames = synthetic_frames("I think, honestly, that speed matters most.", 4.0, 1000);
        assert_eq!(frames[0].t, 1000);
        assert!(frames.windows(2).all(|w| w[1].t >= w[0].t && w[1].t - w[0].t <= 100));
        assert!(!frames.last().unwrap().voiced);
    }

    #[test]
    fn long_answers_get_acknowledged() {
        let frames = synthetic_frames(
            "Well, I really think it matters a lot, because people want to be heard.",
            6.0,
            0,
        );
        let mut p = HeuristicPredictor::default();
        let triggers: Vec<u64> = frames.iter().filter_map(|f| p.observe(f).unwrap()).collect();
        assert!(!triggers.is_empty());
    }

    #[test]
    fn empty_text_has_no_frames() {
        assert!(synthetic_frames("", 2.0, 0).is_empty());
        assert!(synthetic_frames("hello", 0.0, 0).is_empty());
    }

    #[test]
    fn summary_reports_falling_end() {
        let frames = synthetic_frames("one two three four five six", 3.0, 0);
        let s = summarize_prosody(&frames);
        assert!(s.is_valid());
        assert!(s.f0_slope_end < 0.0);
        assert!(s.f0_mean > 170.0 && s.f0_mean < 210.0);
    }
}
