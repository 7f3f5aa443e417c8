//! Aggregation of coded frames into engagement profiles, clustering of
//! students into drivers and passengers, and between-group comparisons.

pub mod kmeans;
pub mod stats;

pub use kmeans::{
    elbow_scan, kmeans_cluster, label_clusters, within_centroid_distance, ClusterError,
    ClusterLabeling,
};
pub use stats::{cohens_d, t_test, t_tail_probability, StatsError, Tail};

use crate::model::{
    EngagementCode, EngagementProfile, GroupSummary, ParticipantId, TestResult, TestVariant,
};
use crate::pipeline::{CodedFrame, ProcessedSession};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("participant {0} is not a student of this session")]
    UnknownParticipant(ParticipantId),
    #[error("cannot build a profile from an empty coded timeline")]
    EmptyTimeline,
    #[error("measured participants without a cluster label: {}", .0.iter().map(|p| p.as_str()).collect::<Vec<_>>().join(", "))]
    UnlabeledParticipants(Vec<ParticipantId>),
    #[error("group {group} has n = {n} < 2 for measure {measure:?}")]
    GroupTooSmall {
        measure: String,
        group: &'static str,
        n: usize,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Normalized code frequencies of one student over a coded session.
pub fn engagement_profile(
    coded: &[CodedFrame],
    students: &[&ParticipantId],
    participant: &ParticipantId,
    session_id: &str,
) -> Result<EngagementProfile, AnalyticsError> {
    if coded.is_empty() {
        return Err(AnalyticsError::EmptyTimeline);
    }
    let index = students
        .iter()
        .position(|s| *s == participant)
        .ok_or_else(|| AnalyticsError::UnknownParticipant(participant.clone()))?;

    let mut counts = [0usize; 3];
    for frame in coded {
        let slot = match frame.codes[index] {
            EngagementCode::Active => 0,
            EngagementCode::SemiActive => 1,
            EngagementCode::Passive => 2,
        };
        counts[slot] += 1;
    }
    let duration = coded.len() as f64;
    Ok(EngagementProfile {
        participant: participant.clone(),
        session_id: session_id.to_owned(),
        freq_active: counts[0] as f64 / duration,
        freq_semi: counts[1] as f64 / duration,
        freq_passive: counts[2] as f64 / duration,
    })
}

/// Profiles for every student of a processed session, in roster order.
pub fn session_profiles(processed: &ProcessedSession) -> Result<Vec<EngagementProfile>, AnalyticsError> {
    let students = processed.smoothed.student_ids();
    students
        .iter()
        .map(|id| {
            engagement_profile(
                &processed.coded,
                &students,
                id,
                &processed.smoothed.session_id,
            )
        })
        .collect()
}

/// Driver or passenger membership of one student.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupLabel {
    Driver,
    Passenger,
}

/// One external measurement of one participant.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureRecord {
    pub participant: ParticipantId,
    pub measure: String,
    pub value: f64,
}

/// One row of the comparison output: group summaries plus the test result
/// for a single measure.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ComparisonReport {
    pub measure: String,
    pub drivers: GroupSummary,
    pub passengers: GroupSummary,
    pub result: TestResult,
}

/// Comparison rows in input order; rows fail independently.
pub type ComparisonRows = Vec<(String, Result<ComparisonReport, AnalyticsError>)>;

/// Compares drivers against passengers on every measure. Rows fail
/// independently: a measure with a group below n = 2 yields an error entry
/// while the other measures still produce reports.
pub fn compare_clusters(
    labels: &BTreeMap<ParticipantId, GroupLabel>,
    measures: &[MeasureRecord],
    variant: TestVariant,
) -> Result<ComparisonRows, AnalyticsError> {
    let unlabeled: Vec<ParticipantId> = {
        let mut seen = Vec::new();
        for m in measures {
            if !labels.contains_key(&m.participant) && !seen.contains(&m.participant) {
                seen.push(m.participant.clone());
            }
        }
        seen
    };
    if !unlabeled.is_empty() {
        return Err(AnalyticsError::UnlabeledParticipants(unlabeled));
    }

    // Group values per measure, preserving first-appearance order of measures.
    let mut order: Vec<String> = Vec::new();
    let mut by_measure: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for m in measures {
        if !by_measure.contains_key(&m.measure) {
            order.push(m.measure.clone());
        }
        let entry = by_measure.entry(m.measure.clone()).or_default();
        match labels[&m.participant] {
            GroupLabel::Driver => entry.0.push(m.value),
            GroupLabel::Passenger => entry.1.push(m.value),
        }
    }

    let mut rows = Vec::with_capacity(order.len());
    for measure in order {
        let (driver_values, passenger_values) = &by_measure[&measure];
        let row = compare_one(&measure, driver_values, passenger_values, variant);
        rows.push((measure, row));
    }
    Ok(rows)
}

fn compare_one(
    measure: &str,
    driver_values: &[f64],
    passenger_values: &[f64],
    variant: TestVariant,
) -> Result<ComparisonReport, AnalyticsError> {
    let drivers = GroupSummary::from_values(driver_values).ok_or(AnalyticsError::GroupTooSmall {
        measure: measure.to_owned(),
        group: "drivers",
        n: driver_values.len(),
    })?;
    let passengers =
        GroupSummary::from_values(passenger_values).ok_or(AnalyticsError::GroupTooSmall {
            measure: measure.to_owned(),
            group: "passengers",
            n: passenger_values.len(),
        })?;
    let result = t_test(&drivers, &passengers, variant)?;
    Ok(ComparisonReport {
        measure: measure.to_owned(),
        drivers,
        passengers,
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InteractionType, Participant, SessionTimeline};
    use approx::assert_abs_diff_eq;

    fn coded(codes: Vec<Vec<EngagementCode>>) -> Vec<CodedFrame> {
        codes
            .into_iter()
            .enumerate()
            .map(|(s, codes)| CodedFrame {
                second: s as u32,
                interaction: InteractionType::Nc,
                codes,
            })
            .collect()
    }

    #[test]
    fn profile_counts_each_code() {
        use EngagementCode::*;
        let frames = coded(
            [Active, Active, Active, SemiActive, SemiActive, SemiActive, SemiActive, Passive, Passive, Passive]
                .iter()
                .map(|c| vec![*c])
                .collect(),
        );
        let id = ParticipantId::new("S1");
        let profile = engagement_profile(&frames, &[&id], &id, "s").unwrap();
        assert_abs_diff_eq!(profile.freq_active, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(profile.freq_semi, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(profile.freq_passive, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn all_active_profile_is_a_vertex() {
        let frames = coded(vec![vec![EngagementCode::Active]; 5]);
        let id = ParticipantId::new("S1");
        let profile = engagement_profile(&frames, &[&id], &id, "s").unwrap();
        assert_eq!(profile.as_point(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn profile_components_sum_to_one() {
        use EngagementCode::*;
        let frames = coded(
            (0..997)
                .map(|i| vec![[Active, SemiActive, Passive][i % 3]])
                .collect(),
        );
        let id = ParticipantId::new("S1");
        let profile = engagement_profile(&frames, &[&id], &id, "s").unwrap();
        let total = profile.freq_active + profile.freq_semi + profile.freq_passive;
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn unknown_participant_is_an_error() {
        let frames = coded(vec![vec![EngagementCode::Passive]]);
        let id = ParticipantId::new("S1");
        let stranger = ParticipantId::new("S9");
        assert!(matches!(
            engagement_profile(&frames, &[&id], &stranger, "s"),
            Err(AnalyticsError::UnknownParticipant(_))
        ));
    }

    #[test]
    fn session_profiles_cover_all_students_in_roster_order() {
        use EngagementCode::*;
        let timeline = SessionTimeline {
            session_id: "s".into(),
            participants: vec![Participant::student("S1"), Participant::student("S2")],
            frames: vec![],
            duration_s: 0,
        };
        let processed = ProcessedSession {
            smoothed: timeline,
            coded: coded(vec![vec![Active, Passive], vec![Active, Passive]]),
        };
        let profiles = session_profiles(&processed).unwrap();
        assert_eq!(profiles.len(), 2);
        assert_eq!(profiles[0].participant, ParticipantId::new("S1"));
        assert_eq!(profiles[0].freq_active, 1.0);
        assert_eq!(profiles[1].freq_passive, 1.0);
    }

    fn labels(pairs: &[(&str, GroupLabel)]) -> BTreeMap<ParticipantId, GroupLabel> {
        pairs
            .iter()
            .map(|(id, label)| (ParticipantId::new(*id), *label))
            .collect()
    }

    fn record(id: &str, measure: &str, value: f64) -> MeasureRecord {
        MeasureRecord {
            participant: ParticipantId::new(id),
            measure: measure.to_owned(),
            value,
        }
    }

    #[test]
    fn identical_groups_compare_to_p_one() {
        let labels = labels(&[
            ("a", GroupLabel::Driver),
            ("b", GroupLabel::Driver),
            ("c", GroupLabel::Passenger),
            ("d", GroupLabel::Passenger),
        ]);
        let measures = vec![
            record("a", "score", 1.0),
            record("b", "score", 2.0),
            record("c", "score", 1.0),
            record("d", "score", 2.0),
        ];
        let rows = compare_clusters(&labels, &measures, TestVariant::Welch).unwrap();
        assert_eq!(rows.len(), 1);
        let report = rows[0].1.as_ref().unwrap();
        assert_eq!(report.result.t, 0.0);
        assert_eq!(report.result.p_two_sided, 1.0);
    }

    #[test]
    fn small_group_fails_per_row_without_killing_other_rows() {
        let labels = labels(&[
            ("a", GroupLabel::Driver),
            ("b", GroupLabel::Driver),
            ("c", GroupLabel::Passenger),
            ("d", GroupLabel::Passenger),
        ]);
        let measures = vec![
            // "lonely" has only one driver value.
            record("a", "lonely", 1.0),
            record("c", "lonely", 2.0),
            record("d", "lonely", 3.0),
            record("a", "fine", 1.0),
            record("b", "fine", 2.0),
            record("c", "fine", 2.0),
            record("d", "fine", 4.0),
        ];
        let rows = compare_clusters(&labels, &measures, TestVariant::Welch).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(matches!(
            rows[0].1.as_ref().unwrap_err(),
            AnalyticsError::GroupTooSmall { group: "drivers", n: 1, .. }
        ));
        let fine = rows[1].1.as_ref().unwrap();
        assert_eq!(fine.drivers.n, 2);
        assert_eq!(fine.passengers.n, 2);
    }

    #[test]
    fn measured_stranger_is_rejected_up_front() {
        let labels = labels(&[("a", GroupLabel::Driver)]);
        let measures = vec![record("zz", "score", 1.0)];
        assert!(matches!(
            compare_clusters(&labels, &measures, TestVariant::Welch),
            Err(AnalyticsError::UnlabeledParticipants(ids)) if ids == vec![ParticipantId::new("zz")]
        ));
    }

    #[test]
    fn missing_measurements_shrink_n_but_still_report() {
        let labels = labels(&[
            ("a", GroupLabel::Driver),
            ("b", GroupLabel::Driver),
            ("c", GroupLabel::Driver),
            ("d", GroupLabel::Passenger),
            ("e", GroupLabel::Passenger),
            ("f", GroupLabel::Passenger),
        ]);
        // c and f are unmeasured, leaving 2 values per group.
        let measures = vec![
            record("a", "score", 3.0),
            record("b", "score", 4.0),
            record("d", "score", 1.0),
            record("e", "score", 2.0),
        ];
        let rows = compare_clusters(&labels, &measures, TestVariant::Welch).unwrap();
        let report = rows[0].1.as_ref().unwrap();
        assert_eq!((report.drivers.n, report.passengers.n), (2, 2));
    }
}
