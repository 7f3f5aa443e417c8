//! Synthetic sessions with known ground truth, and synthetic profile clouds.
//!
//! Sessions are built from episodes. Within an episode every second carries
//! the same raw behavior pattern, chosen so exactly one interaction rule
//! fires and the engagement codes are known by construction. Episodes are at
//! least one smoothing window long, so smoothing cannot flip interior
//! seconds; seconds close to an episode boundary are transition seconds and
//! excluded from exact-match checks.

use crate::model::{
    BehaviorFrame, EngagementCode, EngagementProfile, GazeCategory, InteractionType, Participant,
    ParticipantId, SessionTimeline,
};
use crate::pipeline::CodedFrame;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("scenario weights must be non-negative and sum to 1, got sum {0}")]
    BadWeights(f64),
    #[error("scenario assigns weight to {0} but tutor_present is false")]
    TutorRequired(InteractionType),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Recipe for one synthetic session.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScenarioSpec {
    pub session_id: String,
    pub n_students: usize,
    pub duration_s: u32,
    pub tutor_present: bool,
    /// Mean episode length in seconds.
    pub mean_dwell_s: f64,
    /// Mixture weights over interaction types, in [`InteractionType::ALL`]
    /// order (IPC, RF, PO, RM, ITC, TO, NC).
    pub weights: [f64; 7],
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            session_id: "synthetic".into(),
            n_students: 4,
            duration_s: 2400,
            tutor_present: true,
            mean_dwell_s: 30.0,
            weights: [0.25, 0.2, 0.1, 0.1, 0.1, 0.1, 0.15],
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_students < 2 {
            return Err(SynthError::Invalid(format!(
                "need at least 2 students, got {}",
                self.n_students
            )));
        }
        if self.duration_s == 0 {
            return Err(SynthError::Invalid("duration_s must be positive".into()));
        }
        if self.mean_dwell_s < 1.0 {
            return Err(SynthError::Invalid(format!(
                "mean_dwell_s must be at least 1, got {}",
                self.mean_dwell_s
            )));
        }
        let sum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|w| *w < 0.0) || (sum - 1.0).abs() > 1e-6 {
            return Err(SynthError::BadWeights(sum));
        }
        if !self.tutor_present {
            for (interaction, weight) in InteractionType::ALL.iter().zip(&self.weights) {
                let needs_tutor =
                    matches!(interaction, InteractionType::Itc | InteractionType::To);
                if needs_tutor && *weight > 0.0 {
                    return Err(SynthError::TutorRequired(*interaction));
                }
            }
        }
        Ok(())
    }
}

/// A generated session plus its ground truth and the episode boundaries
/// needed to tell interior seconds from transition seconds.
#[derive(Debug, Clone)]
pub struct GeneratedSession {
    pub timeline: SessionTimeline,
    pub ground_truth: Vec<CodedFrame>,
    /// Start second of every episode, ascending, beginning with 0.
    pub episode_starts: Vec<u32>,
}

impl GeneratedSession {
    /// Seconds at least `margin` away from every episode boundary (and from
    /// the session edges). Only these carry reliable ground truth once
    /// smoothing and speech co-occurrence windows are applied.
    pub fn interior_seconds(&self, margin: u32) -> Vec<u32> {
        let duration = self.timeline.duration_s;
        let mut boundaries = self.episode_starts.clone();
        boundaries.push(duration);
        (0..duration)
            .filter(|&s| {
                boundaries.iter().all(|&b| {
                    // Distance from s to the boundary between b-1 and b.
                    let dist = if s >= b { s - b } else { b - 1 - s };
                    dist >= margin
                })
            })
            .collect()
    }
}

/// Per-second behavior and code pattern of one episode.
struct EpisodePattern {
    gaze: Vec<GazeCategory>,
    speaking: Vec<bool>,
    tutor_speaking: bool,
    codes: Vec<EngagementCode>,
}

/// Builds the raw pattern for one interaction type. The expected codes are
/// written down directly from the engagement rule table rows, independent of
/// the pipeline's lookup code.
fn episode_pattern(
    interaction: InteractionType,
    n_students: usize,
    speaker: usize,
) -> EpisodePattern {
    use EngagementCode::*;
    use GazeCategory::*;

    let mut gaze = vec![Other; n_students];
    let mut speaking = vec![false; n_students];
    let mut codes = vec![Passive; n_students];
    let mut tutor_speaking = false;

    match interaction {
        InteractionType::Ipc => {
            // One speaker watching peers, everyone else watching the speaker.
            speaking[speaker] = true;
            for i in 0..n_students {
                gaze[i] = Student;
                codes[i] = if i == speaker { Active } else { SemiActive };
            }
        }
        InteractionType::Rf => {
            // One speaker presenting from the material, all on laptops.
            speaking[speaker] = true;
            for i in 0..n_students {
                gaze[i] = Laptop;
                codes[i] = if i == speaker { Active } else { SemiActive };
            }
        }
        InteractionType::Po => {
            // Nobody speaks; the chosen student watches a peer.
            gaze[speaker] = Student;
            codes[speaker] = SemiActive;
        }
        InteractionType::Rm => {
            // Silent work on the shared material.
            for i in 0..n_students {
                gaze[i] = Laptop;
                codes[i] = SemiActive;
            }
        }
        InteractionType::Itc => {
            // Tutor and one student in an exchange; observers split between
            // watching the tutor and watching the student speaker.
            tutor_speaking = true;
            speaking[speaker] = true;
            gaze[speaker] = Tutor;
            codes[speaker] = Active;
            for i in 0..n_students {
                if i == speaker {
                    continue;
                }
                gaze[i] = if i % 2 == 0 { Tutor } else { Student };
                codes[i] = SemiActive;
            }
        }
        InteractionType::To => {
            // Tutor lecturing; all but the last student attend.
            tutor_speaking = true;
            for i in 0..n_students {
                if i + 1 == n_students {
                    gaze[i] = Other;
                    codes[i] = Passive;
                } else {
                    gaze[i] = Tutor;
                    codes[i] = SemiActive;
                }
            }
        }
        InteractionType::Nc => {}
    }

    EpisodePattern {
        gaze,
        speaking,
        tutor_speaking,
        codes,
    }
}

/// Generates a session whose per-second patterns each satisfy exactly one
/// interaction rule, together with the coded ground truth.
pub fn generate_session(spec: &ScenarioSpec) -> Result<GeneratedSession, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sampler = WeightedIndex::new(spec.weights)
        .map_err(|_| SynthError::BadWeights(spec.weights.iter().sum()))?;

    // Episodes must survive the smoothing window; 11 also clears the default
    // speech co-occurrence window on both sides.
    let min_dwell = 11u32;

    let mut frames = Vec::with_capacity(spec.duration_s as usize);
    let mut ground_truth = Vec::with_capacity(spec.duration_s as usize);
    let mut episode_starts = Vec::new();
    let mut second = 0u32;
    let mut episode_index = 0usize;

    while second < spec.duration_s {
        let interaction = InteractionType::ALL[sampler.sample(&mut rng)];
        let dwell_jitter = rng.gen_range(0.5..1.5);
        let dwell = ((spec.mean_dwell_s * dwell_jitter).round() as u32)
            .max(min_dwell)
            .min(spec.duration_s - second);
        let speaker = episode_index % spec.n_students;
        let pattern = episode_pattern(interaction, spec.n_students, speaker);

        episode_starts.push(second);
        for _ in 0..dwell {
            frames.push(BehaviorFrame {
                second,
                gaze: pattern.gaze.clone(),
                speaking: pattern.speaking.clone(),
                tutor_speaking: pattern.tutor_speaking,
            });
            ground_truth.push(CodedFrame {
                second,
                interaction,
                codes: pattern.codes.clone(),
            });
            second += 1;
        }
        episode_index += 1;
    }

    let mut participants: Vec<Participant> = (0..spec.n_students)
        .map(|i| Participant::student(format!("S{}", i + 1)))
        .collect();
    if spec.tutor_present {
        participants.push(Participant::tutor("T1"));
    }

    Ok(GeneratedSession {
        timeline: SessionTimeline {
            session_id: spec.session_id.clone(),
            participants,
            frames,
            duration_s: spec.duration_s,
        },
        ground_truth,
        episode_starts,
    })
}

/// Samples labeled points around the given simplex centroids: Gaussian
/// jitter per component, clipped at zero and renormalized onto the simplex.
pub fn generate_profiles(
    centroids: &[[f64; 3]],
    n_per: usize,
    sigma: f64,
    seed: u64,
) -> Vec<(usize, EngagementProfile)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(centroids.len() * n_per);
    for (label, centroid) in centroids.iter().enumerate() {
        for i in 0..n_per {
            let mut point = [0.0f64; 3];
            for (slot, base) in point.iter_mut().zip(centroid) {
                *slot = (base + gaussian(&mut rng) * sigma).max(0.0);
            }
            let sum: f64 = point.iter().sum();
            if sum > 0.0 {
                for slot in &mut point {
                    *slot /= sum;
                }
            } else {
                point = *centroid;
            }
            out.push((
                label,
                EngagementProfile {
                    participant: ParticipantId::new(format!("c{label}p{i}")),
                    session_id: "synthetic".into(),
                    freq_active: point[0],
                    freq_semi: point[1],
                    freq_passive: point[2],
                },
            ));
        }
    }
    out
}

/// Standard normal draw via Box-Muller.
fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// The two cluster centers used as presets for recovery fixtures.
pub const PRESET_CENTROIDS: [[f64; 3]; 2] = [[0.316, 0.425, 0.259], [0.091, 0.600, 0.309]];

/// Raw ingest-format documents for a generated session, so synthetic data
/// can flow through the real parsers unchanged.
#[derive(Debug, Clone)]
pub struct RawTables {
    /// `session_id,second,participant_id,gaze` rows.
    pub gaze_table: String,
    /// Flat `speaker,start,end` diarization rows.
    pub diarization_table: String,
    /// `speaker_label,participant_id,role` rows.
    pub speaker_map: String,
    /// `session_id,participant_id,role` rows.
    pub roster: String,
}

/// Renders a generated session as the raw documents the ingest layer
/// accepts. Speaking runs become integer-bounded diarization segments, which
/// round-trip exactly through the positive-measure overlap rule.
pub fn raw_tables(session: &GeneratedSession) -> RawTables {
    let timeline = &session.timeline;
    let students: Vec<&ParticipantId> = timeline.student_ids();

    let mut gaze_table = String::from("session_id,second,participant_id,gaze\n");
    for frame in &timeline.frames {
        for (idx, student) in students.iter().enumerate() {
            gaze_table.push_str(&format!(
                "{},{},{},{}\n",
                timeline.session_id, frame.second, student, frame.gaze[idx]
            ));
        }
    }

    let mut diarization_table = String::from("speaker,start,end\n");
    let mut emit_runs = |label: &str, flags: Vec<bool>| {
        let mut run_start: Option<u32> = None;
        for (second, flag) in flags.iter().enumerate() {
            match (run_start, flag) {
                (None, true) => run_start = Some(second as u32),
                (Some(start), false) => {
                    diarization_table.push_str(&format!("{label},{start},{second}\n"));
                    run_start = None;
                }
                _ => {}
            }
        }
        if let Some(start) = run_start {
            diarization_table.push_str(&format!("{label},{start},{}\n", flags.len()));
        }
    };
    for (idx, _) in students.iter().enumerate() {
        let flags = timeline.frames.iter().map(|f| f.speaking[idx]).collect();
        emit_runs(&format!("spk_{idx}"), flags);
    }
    let tutor_flags: Vec<bool> = timeline.frames.iter().map(|f| f.tutor_speaking).collect();
    if tutor_flags.iter().any(|&f| f) {
        emit_runs("spk_T", tutor_flags);
    }

    let mut speaker_map = String::from("speaker_label,participant_id,role\n");
    for (idx, student) in students.iter().enumerate() {
        speaker_map.push_str(&format!("spk_{idx},{student},Student\n"));
    }
    let mut roster = String::from("session_id,participant_id,role\n");
    for participant in &timeline.participants {
        roster.push_str(&format!(
            "{},{},{}\n",
            timeline.session_id, participant.id, participant.role
        ));
        if participant.role == crate::model::Role::Tutor {
            speaker_map.push_str(&format!("spk_T,{},Tutor\n", participant.id));
        }
    }

    RawTables {
        gaze_table,
        diarization_table,
        speaker_map,
        roster,
    }
}
