//! On-disk document and table formats shared by the subcommands.

use crate::output::sig6;
use anyhow::{Context, Result};
use engage_core::analytics::{ClusterLabeling, GroupLabel, MeasureRecord};
use engage_core::ingest::IngestReport;
use engage_core::model::{
    ClusterModel, EngagementProfile, Participant, ParticipantId, Role, SessionTimeline,
};
use engage_core::pipeline::ProcessedSession;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Serialized session bundle written by `ingest` and `simulate`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimelineBundle {
    pub seed: u64,
    pub timeline: SessionTimeline,
}

/// Ingestion report document accompanying a bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestReportDoc {
    pub seed: u64,
    pub session_id: String,
    pub duration_s: u32,
    pub report: IngestReport,
}

/// Cluster document written by `cluster`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterDoc {
    pub seed: u64,
    pub k: usize,
    pub runs: usize,
    pub wss: f64,
    pub awcd: f64,
    pub awcd_negated: f64,
    pub run_wss: Vec<f64>,
    pub centroids: Vec<[f64; 3]>,
    pub labeling: Option<ClusterLabeling>,
    pub assignments: Vec<AssignmentEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssignmentEntry {
    pub participant_id: String,
    pub session_id: String,
    pub cluster: usize,
    pub label: Option<GroupLabel>,
}

impl ClusterDoc {
    /// Per-participant driver/passenger labels. A participant clustered in
    /// several sessions must land on one side consistently; measures are
    /// keyed by participant alone, so a conflict would be unattributable.
    pub fn group_labels(&self) -> Result<BTreeMap<ParticipantId, GroupLabel>> {
        let mut labels = BTreeMap::new();
        for assignment in &self.assignments {
            let Some(label) = assignment.label else {
                continue;
            };
            let id = ParticipantId::new(assignment.participant_id.clone());
            if let Some(existing) = labels.insert(id, label) {
                if existing != label {
                    anyhow::bail!(
                        "participant {} carries conflicting cluster labels across sessions; \
                         use globally unique participant ids for cross-session comparisons",
                        assignment.participant_id
                    );
                }
            }
        }
        Ok(labels)
    }
}

/// Coded-timeline table: one row per second, behaviour pair per student,
/// then one code column per student. The gaze and speaking columns come from
/// the timeline the codes were derived from.
pub fn coded_table(timeline: &SessionTimeline, coded: &[engage_core::CodedFrame]) -> String {
    let students = timeline.student_ids();
    let mut out = String::from("second,interaction");
    for id in &students {
        out.push_str(&format!(",{id}_gaze,{id}_speaking"));
    }
    for id in &students {
        out.push_str(&format!(",{id}_code"));
    }
    out.push('\n');

    for (frame, coded) in timeline.frames.iter().zip(coded) {
        out.push_str(&format!("{},{}", coded.second, coded.interaction));
        for i in 0..students.len() {
            out.push_str(&format!(
                ",{},{}",
                frame.gaze[i],
                if frame.speaking[i] { "Y" } else { "N" }
            ));
        }
        for code in &coded.codes {
            out.push_str(&format!(",{code}"));
        }
        out.push('\n');
    }
    out
}

/// Coded table of a processed session: smoothed behaviours plus codes.
pub fn coded_csv(processed: &ProcessedSession) -> String {
    coded_table(&processed.smoothed, &processed.coded)
}

pub fn profiles_csv(profiles: &[EngagementProfile]) -> String {
    let mut out = String::from("participant_id,session_id,freq_active,freq_semi,freq_passive\n");
    for p in profiles {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.participant,
            p.session_id,
            sig6(p.freq_active),
            sig6(p.freq_semi),
            sig6(p.freq_passive)
        ));
    }
    out
}

pub fn read_profiles_csv(path: &Path) -> Result<Vec<EngagementProfile>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read profiles table {}", path.display()))?;
    let mut profiles = Vec::new();
    for (idx, result) in reader.deserialize::<ProfileRow>().enumerate() {
        let row = result.with_context(|| format!("profiles row {}", idx + 2))?;
        profiles.push(EngagementProfile {
            participant: ParticipantId::new(row.participant_id),
            session_id: row.session_id,
            freq_active: row.freq_active,
            freq_semi: row.freq_semi,
            freq_passive: row.freq_passive,
        });
    }
    Ok(profiles)
}

#[derive(Deserialize)]
struct ProfileRow {
    participant_id: String,
    session_id: String,
    freq_active: f64,
    freq_semi: f64,
    freq_passive: f64,
}

/// Mean code frequencies per cluster, the bar-chart data table.
pub fn cluster_means_csv(model: &ClusterModel, labeling: Option<&ClusterLabeling>) -> String {
    let mut out = String::from("cluster,label,n,freq_active,freq_semi,freq_passive\n");
    for (cluster, centroid) in model.centroids.iter().enumerate() {
        let label = match labeling {
            Some(l) if l.driver_cluster == cluster => "driver",
            Some(_) => "passenger",
            None => "",
        };
        let n = model.assignments.iter().filter(|a| **a == cluster).count();
        out.push_str(&format!(
            "{cluster},{label},{n},{},{},{}\n",
            sig6(centroid[0]),
            sig6(centroid[1]),
            sig6(centroid[2])
        ));
    }
    out
}

pub fn read_measures_csv(path: &Path) -> Result<Vec<MeasureRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read measures table {}", path.display()))?;
    let mut records = Vec::new();
    for (idx, result) in reader.deserialize::<MeasureRow>().enumerate() {
        let row = result.with_context(|| format!("measures row {}", idx + 2))?;
        records.push(MeasureRecord {
            participant: ParticipantId::new(row.participant_id),
            measure: row.measure_name,
            value: row.value,
        });
    }
    Ok(records)
}

#[derive(Deserialize)]
struct MeasureRow {
    participant_id: String,
    measure_name: String,
    value: f64,
}

/// Roster rows for one session from a `session_id,participant_id,role`
/// table.
pub fn read_roster_csv(path: &Path, session_id: &str) -> Result<Vec<Participant>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read roster {}", path.display()))?;
    let mut roster = Vec::new();
    for (idx, result) in reader.deserialize::<RosterRow>().enumerate() {
        let row = result.with_context(|| format!("roster row {}", idx + 2))?;
        if row.session_id != session_id {
            continue;
        }
        let role: Role = row
            .role
            .parse()
            .map_err(|e: String| anyhow::anyhow!("roster row {}: {e}", idx + 2))?;
        roster.push(Participant {
            id: ParticipantId::new(row.participant_id),
            role,
        });
    }
    Ok(roster)
}

#[derive(Deserialize)]
struct RosterRow {
    session_id: String,
    participant_id: String,
    role: String,
}

pub const COMPARISONS_HEADER: &str = "measure,driver_n,driver_mean,driver_sd,passenger_n,\
passenger_mean,passenger_sd,t,df,p_one,p_two,cohens_d,variant,error\n";
