//! Domain types shared across the pipeline, plus structural validation of
//! session data.
//!
//! All values here are immutable after construction and safe to move across
//! threads. Wall-clock time never appears in these types; seconds are
//! session-relative indices starting at zero.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Duration band (seconds) outside which [`validate_timeline`] warns.
/// Sessions shorter than a minute or longer than two hours are suspicious
/// but never rejected.
pub const PLAUSIBLE_DURATION_S: std::ops::RangeInclusive<u32> = 60..=7200;

/// Opaque participant identifier, unique within a session.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParticipantId(pub String);

impl ParticipantId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ParticipantId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// Session role of a participant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Student,
    Tutor,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Student => f.write_str("Student"),
            Role::Tutor => f.write_str("Tutor"),
        }
    }
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "Student" | "student" => Ok(Role::Student),
            "Tutor" | "tutor" => Ok(Role::Tutor),
            other => Err(format!("unknown role {other:?} (expected Student or Tutor)")),
        }
    }
}

/// A participant declared in a session roster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub id: ParticipantId,
    pub role: Role,
}

impl Participant {
    pub fn student(id: impl Into<String>) -> Self {
        Self {
            id: ParticipantId::new(id),
            role: Role::Student,
        }
    }

    pub fn tutor(id: impl Into<String>) -> Self {
        Self {
            id: ParticipantId::new(id),
            role: Role::Tutor,
        }
    }
}

/// Category-level gaze target. Annotations never resolve *which* peer or
/// screen is looked at, only the kind of target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GazeCategory {
    Student,
    Laptop,
    Tutor,
    Other,
}

impl GazeCategory {
    pub const ALL: [GazeCategory; 4] = [
        GazeCategory::Student,
        GazeCategory::Laptop,
        GazeCategory::Tutor,
        GazeCategory::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GazeCategory::Student => "Student",
            GazeCategory::Laptop => "Laptop",
            GazeCategory::Tutor => "Tutor",
            GazeCategory::Other => "Other",
        }
    }
}

impl fmt::Display for GazeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for GazeCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "Student" => Ok(GazeCategory::Student),
            "Laptop" => Ok(GazeCategory::Laptop),
            "Tutor" => Ok(GazeCategory::Tutor),
            "Other" => Ok(GazeCategory::Other),
            other => Err(format!("unknown gaze category {other:?}")),
        }
    }
}

/// A diarized speech segment: who spoke, from `start` to `end` seconds.
/// `end > start`; segments of different speakers may overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeechSegment {
    pub speaker_label: String,
    pub start: f64,
    pub end: f64,
}

impl SpeechSegment {
    pub fn new(speaker_label: impl Into<String>, start: f64, end: f64) -> Self {
        Self {
            speaker_label: speaker_label.into(),
            start,
            end,
        }
    }
}

/// One second of a session: gaze and speaking state for every student,
/// aligned with the roster's student order, plus a tutor speaking flag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorFrame {
    pub second: u32,
    pub gaze: Vec<GazeCategory>,
    pub speaking: Vec<bool>,
    pub tutor_speaking: bool,
}

impl BehaviorFrame {
    pub fn new(second: u32, gaze: Vec<GazeCategory>, speaking: Vec<bool>, tutor_speaking: bool) -> Self {
        Self {
            second,
            gaze,
            speaking,
            tutor_speaking,
        }
    }

    /// True if any student speaks during this frame.
    pub fn any_student_speaking(&self) -> bool {
        self.speaking.iter().any(|&s| s)
    }
}

/// A whole session on the per-second grid. Frame vectors are aligned with
/// the students of `participants` in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTimeline {
    pub session_id: String,
    pub participants: Vec<Participant>,
    pub frames: Vec<BehaviorFrame>,
    pub duration_s: u32,
}

impl SessionTimeline {
    /// Student ids in roster order; frame vectors align with this.
    pub fn student_ids(&self) -> Vec<&ParticipantId> {
        self.participants
            .iter()
            .filter(|p| p.role == Role::Student)
            .map(|p| &p.id)
            .collect()
    }

    pub fn student_count(&self) -> usize {
        self.participants
            .iter()
            .filter(|p| p.role == Role::Student)
            .count()
    }

    /// Index of a student within the frame vectors, if present.
    pub fn student_index(&self, id: &ParticipantId) -> Option<usize> {
        self.participants
            .iter()
            .filter(|p| p.role == Role::Student)
            .position(|p| &p.id == id)
    }
}

/// The seven group-interaction statuses, one per classified second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InteractionType {
    /// Interacting with peers through communication.
    Ipc,
    /// Referring and following shared material.
    Rf,
    /// Peer observation.
    Po,
    /// Resource management.
    Rm,
    /// Interacting with tutor through communication.
    Itc,
    /// Tutor observation.
    To,
    /// No collaboration.
    Nc,
}

impl InteractionType {
    pub const ALL: [InteractionType; 7] = [
        InteractionType::Ipc,
        InteractionType::Rf,
        InteractionType::Po,
        InteractionType::Rm,
        InteractionType::Itc,
        InteractionType::To,
        InteractionType::Nc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InteractionType::Ipc => "IPC",
            InteractionType::Rf => "RF",
            InteractionType::Po => "PO",
            InteractionType::Rm => "RM",
            InteractionType::Itc => "ITC",
            InteractionType::To => "TO",
            InteractionType::Nc => "NC",
        }
    }
}

impl fmt::Display for InteractionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for InteractionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "IPC" => Ok(InteractionType::Ipc),
            "RF" => Ok(InteractionType::Rf),
            "PO" => Ok(InteractionType::Po),
            "RM" => Ok(InteractionType::Rm),
            "ITC" => Ok(InteractionType::Itc),
            "TO" => Ok(InteractionType::To),
            "NC" => Ok(InteractionType::Nc),
            other => Err(format!("unknown interaction type {other:?}")),
        }
    }
}

/// Per-second engagement code for one student.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EngagementCode {
    Active,
    SemiActive,
    Passive,
}

impl EngagementCode {
    pub fn as_str(self) -> &'static str {
        match self {
            EngagementCode::Active => "Active",
            EngagementCode::SemiActive => "Semi-active",
            EngagementCode::Passive => "Passive",
        }
    }
}

impl fmt::Display for EngagementCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EngagementCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "Active" => Ok(EngagementCode::Active),
            "Semi-active" | "SemiActive" => Ok(EngagementCode::SemiActive),
            "Passive" => Ok(EngagementCode::Passive),
            other => Err(format!("unknown engagement code {other:?}")),
        }
    }
}

/// Session-level code frequencies of one student; lies on the 3-simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementProfile {
    pub participant: ParticipantId,
    pub session_id: String,
    pub freq_active: f64,
    pub freq_semi: f64,
    pub freq_passive: f64,
}

impl EngagementProfile {
    pub fn as_point(&self) -> [f64; 3] {
        [self.freq_active, self.freq_semi, self.freq_passive]
    }
}

/// A fitted k-means model over engagement profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    /// Cluster centers in (active, semi, passive) coordinates.
    pub centroids: Vec<[f64; 3]>,
    /// Profile index -> cluster index.
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squared distances.
    pub wss: f64,
    /// Mean squared distance from profiles to their assigned centroid.
    pub awcd: f64,
    /// Best wss achieved by each restart, in run order.
    pub run_wss: Vec<f64>,
}

impl ClusterModel {
    /// awcd with the sign flipped, matching tools that report the average
    /// within-centroid distance negated.
    pub fn awcd_negated(&self) -> f64 {
        -self.awcd
    }
}

/// Size, mean, and sample standard deviation of one comparison group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl GroupSummary {
    pub fn new(n: usize, mean: f64, sd: f64) -> Self {
        Self { n, mean, sd }
    }

    /// Summarize raw values with the n-1 denominator for the sd.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n < 2 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        Some(Self {
            n,
            mean,
            sd: var.sqrt(),
        })
    }
}

/// Which two-sample t statistic was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestVariant {
    Welch,
    Student,
}

impl fmt::Display for TestVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestVariant::Welch => f.write_str("welch"),
            TestVariant::Student => f.write_str("student"),
        }
    }
}

/// Outcome of a two-group comparison. The one-sided p is for the alternative
/// that the first group's mean exceeds the second's, so it equals
/// `p_two_sided / 2` exactly when the observed t is positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub t: f64,
    pub df: f64,
    pub p_two_sided: f64,
    pub p_one_sided: f64,
    pub cohens_d: f64,
    pub variant: TestVariant,
}

/// One structural problem found in a timeline. Violations are data, not
/// errors: callers decide whether to reject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Frame index the problem was found at, if frame-local.
    pub frame: Option<usize>,
    /// Field or aspect the violation concerns.
    pub field: String,
    pub message: String,
}

impl Violation {
    fn at(frame: usize, field: &str, message: String) -> Self {
        Self {
            frame: Some(frame),
            field: field.to_owned(),
            message,
        }
    }

    fn global(field: &str, message: String) -> Self {
        Self {
            frame: None,
            field: field.to_owned(),
            message,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.frame {
            Some(idx) => write!(f, "frame {idx}, {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

/// Checks every structural invariant of a timeline and returns the list of
/// violations, empty iff the timeline is well formed. Pure: identical input
/// always yields identical output. Implausible (but legal) durations are
/// logged, never reported as violations.
pub fn validate_timeline(timeline: &SessionTimeline) -> Vec<Violation> {
    let mut violations = Vec::new();

    let n_students = timeline.student_count();
    if n_students < 2 {
        violations.push(Violation::global(
            "participants",
            format!("session requires at least 2 students, found {n_students}"),
        ));
    }

    let mut seen = std::collections::HashSet::new();
    for p in &timeline.participants {
        if !seen.insert(&p.id) {
            violations.push(Violation::global(
                "participants",
                format!("duplicate participant id {:?}", p.id.as_str()),
            ));
        }
    }

    if timeline.duration_s as usize != timeline.frames.len() {
        violations.push(Violation::global(
            "duration_s",
            format!(
                "duration_s is {} but timeline has {} frames",
                timeline.duration_s,
                timeline.frames.len()
            ),
        ));
    }

    if !PLAUSIBLE_DURATION_S.contains(&timeline.duration_s) {
        log::warn!(
            "session {}: duration {} s outside plausible band [{}, {}] s",
            timeline.session_id,
            timeline.duration_s,
            PLAUSIBLE_DURATION_S.start(),
            PLAUSIBLE_DURATION_S.end()
        );
    }

    for (idx, frame) in timeline.frames.iter().enumerate() {
        if frame.second != idx as u32 {
            violations.push(Violation::at(
                idx,
                "second",
                format!("non-contiguous seconds: expected {idx}, found {}", frame.second),
            ));
        }
        if frame.gaze.len() != n_students {
            violations.push(Violation::at(
                idx,
                "gaze",
                format!(
                    "missing participant data: {} gaze entries for {} declared students",
                    frame.gaze.len(),
                    n_students
                ),
            ));
        }
        if frame.speaking.len() != n_students {
            violations.push(Violation::at(
                idx,
                "speaking",
                format!(
                    "missing participant data: {} speaking entries for {} declared students",
                    frame.speaking.len(),
                    n_students
                ),
            ));
        }
    }

    violations
}
