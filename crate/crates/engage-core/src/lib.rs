//! Deterministic analytics for face-to-face collaborative learning sessions.
//!
//! The crate turns per-second gaze and speech records into group-interaction
//! classifications and per-student engagement codes through a transparent
//! rule system, aggregates the codes into engagement profiles, clusters
//! students into drivers and passengers, and runs the between-group
//! comparison statistics.
//!
//! Data flows through four stages:
//!
//! 1. [`ingest`] parses diarization documents, gaze tables, and speaker
//!    maps, and synchronizes them onto a per-second [`model::SessionTimeline`].
//! 2. [`pipeline`] smooths gaze streams, classifies each second into one of
//!    seven interaction types, and codes every student's engagement.
//! 3. [`analytics`] builds normalized engagement profiles, clusters them
//!    with seeded k-means, and compares the clusters with t-tests and
//!    Cohen's d.
//! 4. [`synth`] generates sessions with known ground truth for testing the
//!    rule system end to end.

pub mod analytics;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod synth;

pub use analytics::{GroupLabel, MeasureRecord};
pub use model::{
    BehaviorFrame, ClusterModel, EngagementCode, EngagementProfile, GazeCategory, GroupSummary,
    InteractionType, Participant, ParticipantId, Role, SessionTimeline, SpeechSegment, TestResult,
    TestVariant,
};
pub use pipeline::{CodedFrame, PipelineConfig, ProcessedSession};
