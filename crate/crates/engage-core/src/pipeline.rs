//! The analytic core: gaze smoothing, per-second group-interaction
//! classification, and per-student engagement coding.
//!
//! Classification applies seven rules in a fixed precedence order
//! (ITC > TO > RF > IPC > PO > RM > NC). Tutor-involving states are checked
//! first; RF precedes IPC because RF is keyed to the speaker's own
//! material-directed gaze. This ordering makes every N/A cell of the
//! engagement rule table unreachable, so hitting one at coding time signals
//! a classifier bug, never bad data.

use crate::model::{
    BehaviorFrame, EngagementCode, GazeCategory, InteractionType, SessionTimeline,
};
use thiserror::Error;

/// Tunable parameters of the per-second pipeline.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PipelineConfig {
    /// Width of the gaze smoothing window in seconds; must be odd so the
    /// window centers on the coded second.
    pub window_s: u32,
    /// How far apart (seconds) tutor and student speech may be and still
    /// count as one tutor-student exchange.
    pub itc_cooccurrence_window_s: u32,
    /// Minimum number of material-gazing students for resource management.
    pub rm_min_lookers: usize,
    /// Smooth over the trailing window `[s-w+1, s]` instead of centering.
    pub trailing_window: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            window_s: 5,
            itc_cooccurrence_window_s: 5,
            rm_min_lookers: 2,
            trailing_window: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.window_s == 0 || self.window_s.is_multiple_of(2) {
            return Err(PipelineError::InvalidConfig(format!(
                "window_s must be odd and positive, got {}",
                self.window_s
            )));
        }
        if self.itc_cooccurrence_window_s == 0 {
            return Err(PipelineError::InvalidConfig(
                "itc_cooccurrence_window_s must be positive".into(),
            ));
        }
        if self.rm_min_lookers < 2 {
            return Err(PipelineError::InvalidConfig(format!(
                "rm_min_lookers must be at least 2, got {}",
                self.rm_min_lookers
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    /// A (interaction, speaking, gaze) combination landed on an N/A cell of
    /// the engagement rule table. The classifier's precedence is supposed to
    /// make these unreachable, so this is an internal-consistency failure.
    #[error(
        "internal consistency error at second {second}, student index {student}: \
         no engagement code for ({interaction}, speaking={speaking}, gaze={gaze})"
    )]
    Inconsistent {
        second: u32,
        student: usize,
        interaction: InteractionType,
        speaking: bool,
        gaze: GazeCategory,
    },
}

/// One classified and coded second.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CodedFrame {
    pub second: u32,
    pub interaction: InteractionType,
    /// One code per student, aligned with the roster's student order.
    pub codes: Vec<EngagementCode>,
}

/// Pipeline output for one session: the smoothed timeline the codes were
/// derived from, plus one coded frame per second.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedSession {
    pub smoothed: SessionTimeline,
    pub coded: Vec<CodedFrame>,
}

/// Majority-vote smoothing of gaze streams; speaking flags pass through.
///
/// For each student, the gaze at second `s` becomes the most frequent
/// category over the window (centered by default, truncated at session
/// boundaries). Ties resolve to the previous smoothed value when it is among
/// the tied categories, else the raw value at `s` when tied, else the first
/// tied category in the fixed order Student < Laptop < Tutor < Other, so
/// reruns are bit-identical.
pub fn smooth_gaze(timeline: &SessionTimeline, cfg: &PipelineConfig) -> SessionTimeline {
    let n = timeline.frames.len();
    let n_students = timeline.student_count();
    let mut smoothed = timeline.clone();
    if n == 0 {
        return smoothed;
    }

    let w = cfg.window_s as usize;
    let half = w / 2;

    for student in 0..n_students {
        let raw: Vec<GazeCategory> = timeline.frames.iter().map(|f| f.gaze[student]).collect();
        let mut previous: Option<GazeCategory> = None;
        for s in 0..n {
            let (lo, hi) = if cfg.trailing_window {
                (s.saturating_sub(w - 1), s)
            } else {
                (s.saturating_sub(half), (s + half).min(n - 1))
            };
            let mut counts = [0usize; 4];
            for value in &raw[lo..=hi] {
                counts[*value as usize] += 1;
            }
            let best = *counts.iter().max().expect("window is non-empty");
            let tied: Vec<GazeCategory> = GazeCategory::ALL
                .iter()
                .copied()
                .filter(|g| counts[*g as usize] == best)
                .collect();
            let winner = if tied.len() == 1 {
                tied[0]
            } else if let Some(prev) = previous.filter(|p| tied.contains(p)) {
                prev
            } else if tied.contains(&raw[s]) {
                raw[s]
            } else {
                tied[0] // GazeCategory::ALL is already in the fixed order
            };
            smoothed.frames[s].gaze[student] = winner;
            previous = Some(winner);
        }
    }
    smoothed
}

fn window_bounds(s: usize, n: usize, radius: u32) -> (usize, usize) {
    let radius = radius as usize;
    (s.saturating_sub(radius), (s + radius).min(n - 1))
}

fn any_student_speech_within(frames: &[BehaviorFrame], s: usize, radius: u32) -> bool {
    let (lo, hi) = window_bounds(s, frames.len(), radius);
    frames[lo..=hi].iter().any(|f| f.any_student_speaking())
}

fn tutor_speech_within(frames: &[BehaviorFrame], s: usize, radius: u32) -> bool {
    let (lo, hi) = window_bounds(s, frames.len(), radius);
    frames[lo..=hi].iter().any(|f| f.tutor_speaking)
}

/// Classifies the group interaction at second `s` of a smoothed timeline.
///
/// Rules fire in fixed precedence; the function is total.
pub fn classify_interaction(
    timeline: &SessionTimeline,
    s: usize,
    cfg: &PipelineConfig,
) -> InteractionType {
    let frames = &timeline.frames;
    let frame = &frames[s];
    let radius = cfg.itc_cooccurrence_window_s;

    let speakers: Vec<usize> = (0..frame.speaking.len())
        .filter(|&i| frame.speaking[i])
        .collect();
    let any_speaker = !speakers.is_empty();
    let gazes_at = |category: GazeCategory| {
        frame
            .gaze
            .iter()
            .enumerate()
            .filter(move |(_, g)| **g == category)
    };

    // 1. ITC: a spoken exchange involving both students and a tutor, either
    //    in the same second or alternating within the co-occurrence window.
    let itc = (frame.tutor_speaking && any_student_speech_within(frames, s, radius))
        || speakers.iter().any(|&i| frame.gaze[i] == GazeCategory::Tutor)
        || (any_speaker && tutor_speech_within(frames, s, radius));
    if itc {
        return InteractionType::Itc;
    }

    // 2. TO: silent students attending a speaking tutor.
    if frame.tutor_speaking
        && !any_speaker
        && gazes_at(GazeCategory::Tutor).next().is_some()
    {
        return InteractionType::To;
    }

    // 3. RF: every speaker gazes at the shared material and at least one
    //    listener follows them there.
    if any_speaker
        && speakers.iter().all(|&i| frame.gaze[i] == GazeCategory::Laptop)
        && gazes_at(GazeCategory::Laptop).any(|(i, _)| !frame.speaking[i])
    {
        return InteractionType::Rf;
    }

    // 4. IPC: somebody speaks and at least one listener watches the speakers.
    if any_speaker && gazes_at(GazeCategory::Student).any(|(i, _)| !frame.speaking[i]) {
        return InteractionType::Ipc;
    }

    // 5. PO: speech-free observation of peers.
    if !any_speaker && gazes_at(GazeCategory::Student).next().is_some() {
        return InteractionType::Po;
    }

    // 6. RM: speech-free shared attention to the material.
    if !any_speaker && gazes_at(GazeCategory::Laptop).count() >= cfg.rm_min_lookers {
        return InteractionType::Rm;
    }

    // 7. NC: nothing fired.
    InteractionType::Nc
}

/// Looks up one student's engagement code in the rule table.
///
/// `student_speaker_present` says whether any student speaks in this frame;
/// it decides the "attending the current speaker" cell of the ITC row.
/// Returns `None` exactly on the table's N/A cells.
pub fn engagement_code(
    interaction: InteractionType,
    speaking: bool,
    gaze: GazeCategory,
    student_speaker_present: bool,
) -> Option<EngagementCode> {
    use EngagementCode::*;
    use GazeCategory as G;
    use InteractionType::*;

    let code = match (interaction, speaking, gaze) {
        (Ipc, true, G::Student | G::Laptop | G::Other) => Active,
        (Ipc, true, G::Tutor) => return None,
        (Ipc, false, G::Student) => SemiActive,
        (Ipc, false, _) => Passive,

        (Rf, true, G::Laptop) => Active,
        (Rf, true, _) => return None,
        (Rf, false, G::Laptop) => SemiActive,
        (Rf, false, _) => Passive,

        (Po, true, _) => return None,
        (Po, false, G::Student) => SemiActive,
        (Po, false, _) => Passive,

        (Rm, true, _) => return None,
        (Rm, false, G::Laptop) => SemiActive,
        (Rm, false, _) => Passive,

        (Itc, true, _) => Active,
        (Itc, false, G::Tutor) => SemiActive,
        (Itc, false, G::Student) if student_speaker_present => SemiActive,
        (Itc, false, _) => Passive,

        (To, true, _) => return None,
        (To, false, G::Tutor) => SemiActive,
        (To, false, _) => Passive,

        (Nc, _, _) => Passive,
    };
    Some(code)
}

/// Codes every student of a smoothed frame under the given interaction.
pub fn code_engagement(
    frame: &BehaviorFrame,
    interaction: InteractionType,
) -> Result<Vec<EngagementCode>, PipelineError> {
    let student_speaker_present = frame.any_student_speaking();
    frame
        .gaze
        .iter()
        .zip(&frame.speaking)
        .enumerate()
        .map(|(student, (&gaze, &speaking))| {
            engagement_code(interaction, speaking, gaze, student_speaker_present).ok_or(
                PipelineError::Inconsistent {
                    second: frame.second,
                    student,
                    interaction,
                    speaking,
                    gaze,
                },
            )
        })
        .collect()
}

/// Runs the full per-session pipeline: smooth, then classify and code every
/// second. Output length always equals input length.
pub fn process_session(
    timeline: &SessionTimeline,
    cfg: &PipelineConfig,
) -> Result<ProcessedSession, PipelineError> {
    cfg.validate()?;
    let smoothed = smooth_gaze(timeline, cfg);
    let coded = (0..smoothed.frames.len())
        .map(|s| {
            let interaction = classify_interaction(&smoothed, s, cfg);
            let codes = code_engagement(&smoothed.frames[s], interaction)?;
            Ok(CodedFrame {
                second: s as u32,
                interaction,
                codes,
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    Ok(ProcessedSession { smoothed, coded })
}
