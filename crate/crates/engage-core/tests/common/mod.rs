//! Shared test support: an independent rule evaluator, a data-driven mirror
//! of the engagement rule table, and randomized frame generators.
//!
//! The oracle here deliberately re-derives everything from the rule
//! definitions instead of calling into the pipeline, so agreement between
//! the two is meaningful.

use engage_core::model::{
    BehaviorFrame, EngagementCode, GazeCategory, InteractionType, Participant, SessionTimeline,
};
use engage_core::pipeline::PipelineConfig;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One cell of the engagement rule table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Active,
    Semi,
    Passive,
    /// Semi-active only while a student speaker is present, else passive.
    SemiIfStudentSpeaker,
    Na,
}

/// The full rule table, indexed `[interaction][speaking][gaze]` with
/// interactions in `InteractionType::ALL` order (IPC, RF, PO, RM, ITC, TO,
/// NC), speaking as 0 = silent / 1 = speaking, and gaze in declaration
/// order (Student, Laptop, Tutor, Other).
pub const RULE_TABLE: [[[Cell; 4]; 2]; 7] = {
    use Cell::*;
    [
        // IPC
        [
            [Semi, Passive, Passive, Passive],
            [Active, Active, Na, Active],
        ],
        // RF
        [
            [Passive, Semi, Passive, Passive],
            [Na, Active, Na, Na],
        ],
        // PO
        [[Semi, Passive, Passive, Passive], [Na, Na, Na, Na]],
        // RM
        [[Passive, Semi, Passive, Passive], [Na, Na, Na, Na]],
        // ITC
        [
            [SemiIfStudentSpeaker, Passive, Semi, Passive],
            [Active, Active, Active, Active],
        ],
        // TO
        [[Passive, Passive, Semi, Passive], [Na, Na, Na, Na]],
        // NC
        [
            [Passive, Passive, Passive, Passive],
            [Passive, Passive, Passive, Passive],
        ],
    ]
};

fn interaction_index(interaction: InteractionType) -> usize {
    InteractionType::ALL
        .iter()
        .position(|i| *i == interaction)
        .expect("interaction is in ALL")
}

/// Table-driven engagement lookup, the second route against the pipeline's
/// match expression. `None` is an N/A cell.
pub fn oracle_code(
    interaction: InteractionType,
    speaking: bool,
    gaze: GazeCategory,
    student_speaker_present: bool,
) -> Option<EngagementCode> {
    let cell = RULE_TABLE[interaction_index(interaction)][usize::from(speaking)][gaze as usize];
    match cell {
        Cell::Active => Some(EngagementCode::Active),
        Cell::Semi => Some(EngagementCode::SemiActive),
        Cell::Passive => Some(EngagementCode::Passive),
        Cell::SemiIfStudentSpeaker => Some(if student_speaker_present {
            EngagementCode::SemiActive
        } else {
            EngagementCode::Passive
        }),
        Cell::Na => None,
    }
}

/// Brute-force interaction classification: evaluates all seven rule
/// predicates over the frame and its context, then takes the first that
/// fired in precedence order.
pub fn oracle_classify(
    timeline: &SessionTimeline,
    s: usize,
    cfg: &PipelineConfig,
) -> InteractionType {
    use GazeCategory::*;
    let frame = &timeline.frames[s];
    let n = timeline.frames.len();
    let radius = cfg.itc_cooccurrence_window_s as i64;

    let near = |predicate: &dyn Fn(&BehaviorFrame) -> bool| -> bool {
        ((s as i64 - radius)..=(s as i64 + radius))
            .filter(|u| *u >= 0 && (*u as usize) < n)
            .any(|u| predicate(&timeline.frames[u as usize]))
    };
    let student_speech_near = near(&|f: &BehaviorFrame| f.speaking.iter().any(|&b| b));
    let tutor_speech_near = near(&|f: &BehaviorFrame| f.tutor_speaking);

    let n_students = frame.gaze.len();
    let speaking_students: Vec<usize> = (0..n_students).filter(|&i| frame.speaking[i]).collect();
    let silent_gazing_at =
        |c: GazeCategory| (0..n_students).any(|i| !frame.speaking[i] && frame.gaze[i] == c);

    let itc = (frame.tutor_speaking && student_speech_near)
        || speaking_students.iter().any(|&i| frame.gaze[i] == Tutor)
        || (!speaking_students.is_empty() && tutor_speech_near);
    let to = frame.tutor_speaking
        && speaking_students.is_empty()
        && frame.gaze.contains(&Tutor);
    let rf = !speaking_students.is_empty()
        && speaking_students.iter().all(|&i| frame.gaze[i] == Laptop)
        && silent_gazing_at(Laptop);
    let ipc = !speaking_students.is_empty() && silent_gazing_at(Student);
    let po = speaking_students.is_empty() && frame.gaze.contains(&Student);
    let rm = speaking_students.is_empty()
        && frame.gaze.iter().filter(|g| **g == Laptop).count() >= cfg.rm_min_lookers;

    let fired = [
        (InteractionType::Itc, itc),
        (InteractionType::To, to),
        (InteractionType::Rf, rf),
        (InteractionType::Ipc, ipc),
        (InteractionType::Po, po),
        (InteractionType::Rm, rm),
    ];
    fired
        .iter()
        .find(|(_, fired)| *fired)
        .map(|(interaction, _)| *interaction)
        .unwrap_or(InteractionType::Nc)
}

pub fn random_frame(rng: &mut ChaCha8Rng, second: u32, n_students: usize) -> BehaviorFrame {
    BehaviorFrame {
        second,
        gaze: (0..n_students)
            .map(|_| GazeCategory::ALL[rng.gen_range(0..4)])
            .collect(),
        speaking: (0..n_students).map(|_| rng.gen_bool(0.3)).collect(),
        tutor_speaking: rng.gen_bool(0.3),
    }
}

pub fn random_timeline(rng: &mut ChaCha8Rng, n_students: usize, duration: u32) -> SessionTimeline {
    SessionTimeline {
        session_id: "random".into(),
        participants: (0..n_students)
            .map(|i| Participant::student(format!("S{}", i + 1)))
            .collect(),
        frames: (0..duration)
            .map(|s| random_frame(rng, s, n_students))
            .collect(),
        duration_s: duration,
    }
}

/// Single-frame session around one frame, for frame-local properties.
pub fn single_frame_session(frame: BehaviorFrame) -> SessionTimeline {
    let n_students = frame.gaze.len();
    SessionTimeline {
        session_id: "frame".into(),
        participants: (0..n_students)
            .map(|i| Participant::student(format!("S{}", i + 1)))
            .collect(),
        frames: vec![frame],
        duration_s: 1,
    }
}
